#include "tsn/synthetic.hpp"

#include <cmath>

#include "tsn/rng.hpp"

namespace tsn {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::vector<double> generate_user(const SyntheticUserParams& params, std::size_t length,
                                  std::uint64_t seed) {
    if (params.period <= 0.0) throw ConfigInvalid("synthetic: period must be positive");
    if (params.sigma_noise < 0.0) throw ConfigInvalid("synthetic: negative noise deviation");
    Rng rng(seed);
    std::vector<double> x(length);
    for (std::size_t t = 0; t < length; ++t) {
        double tt = static_cast<double>(t);
        x[t] = params.trend * tt + params.offset +
               params.amplitude * std::sin(kTwoPi * tt / params.period) +
               params.sigma_noise * rng.next_gaussian();
    }
    return x;
}

SyntheticDataset generate_dataset(const SyntheticSpec& spec) {
    if (spec.length == 0) throw ConfigInvalid("synthetic: length must be positive");
    if (spec.clusters.empty()) throw ConfigInvalid("synthetic: no clusters configured");

    SyntheticDataset out;
    out.data.frequency = "synthetic";
    std::size_t user_index = 0;
    for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
        const SyntheticCluster& cluster = spec.clusters[c];
        std::string cluster_id = "c" + std::to_string(c);
        for (std::size_t k = 0; k < cluster.count; ++k, ++user_index) {
            Rng jitter(derive_seed(spec.seed, 0xAu, user_index));
            SyntheticUserParams p = cluster.base;
            if (cluster.jitter_trend > 0.0) {
                p.trend += jitter.next_range(-cluster.jitter_trend, cluster.jitter_trend);
            }
            if (cluster.jitter_offset > 0.0) {
                p.offset += jitter.next_range(-cluster.jitter_offset, cluster.jitter_offset);
            }
            std::string user_id = "u" + std::to_string(user_index);
            out.data.user_ids.push_back(user_id);
            out.data.values.push_back(
                generate_user(p, spec.length, derive_seed(spec.seed, 0xBu, user_index)));
            out.data.mask.emplace_back(spec.length, 1);
            out.labels[user_id] = cluster_id;
        }
    }
    if (out.data.num_users() == 0) throw ConfigInvalid("synthetic: zero users configured");
    return out;
}

Modulations closed_form_modulations(const SyntheticUserParams& params, std::size_t lookback,
                                    std::size_t horizon, double epsilon) {
    if (lookback < 2 || horizon < 2) {
        throw ConfigInvalid("closed_form_modulations: need L >= 2 and H >= 2");
    }
    double cycles_l = static_cast<double>(lookback) / params.period;
    double cycles_h = static_cast<double>(horizon) / params.period;
    if (std::abs(cycles_l - std::round(cycles_l)) > 1e-9 ||
        std::abs(cycles_h - std::round(cycles_h)) > 1e-9) {
        warn("closed_form_modulations: period does not divide L and H; "
             "the approximation degrades");
    }
    double l = static_cast<double>(lookback);
    double h = static_cast<double>(horizon);
    double half_amp_sq = 0.5 * params.amplitude * params.amplitude;
    double noise_var = params.sigma_noise * params.sigma_noise;
    double sigma_x =
        std::sqrt(params.trend * params.trend * l * l / 12.0 + half_amp_sq + noise_var);
    double sigma_y =
        std::sqrt(params.trend * params.trend * h * h / 12.0 + half_amp_sq + noise_var);
    Modulations m;
    m.delta = params.trend * (l + h) / 2.0 / (sigma_x + epsilon);
    m.lambda = sigma_y / (sigma_x + epsilon);
    return m;
}

}  // namespace tsn
