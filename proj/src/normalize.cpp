#include "tsn/normalize.hpp"

#include <cmath>

#include <json.hpp>

namespace tsn {

namespace {

constexpr double kScaleFloor = 1e-300;

// Every strategy's map is per-element affine: out = (v - shift) * inv_scale,
// inverted as v = out * scale + shift.  Resolving (shift, scale) once per
// window keeps normalize/denormalize exact mirrors of each other.
struct AffineMap {
    double shift = 0.0;
    double scale = 1.0;
};

AffineMap resolve_map(const NormStrategy& s, const WindowContext& ctx) {
    switch (s.kind) {
        case NormKind::none:
            return {0.0, 1.0};
        case NormKind::standard: {
            if (!s.global) throw MissingContext("normalize: global stats not fitted");
            return {s.global->mu, s.global->sigma + s.epsilon};
        }
        case NormKind::minmax: {
            if (!s.minmax) throw MissingContext("normalize: min/max bounds not fitted");
            return {s.minmax->min, s.minmax->max - s.minmax->min + s.epsilon};
        }
        case NormKind::relative: {
            if (!s.global) throw MissingContext("normalize: global stats not fitted");
            if (s.global->mu <= 0.0) {
                warn("relative normalization with non-positive mean");
            }
            return {0.0, s.global->mu + s.epsilon};
        }
        case NormKind::per_user_standard: {
            auto it = s.per_user.find(ctx.user);
            if (it == s.per_user.end()) {
                if (s.global) {
                    warn("per-user stats missing for user " + ctx.user +
                         "; falling back to global stats");
                    return {s.global->mu, s.global->sigma + s.epsilon};
                }
                throw MissingContext("normalize: no per-user stats for user " + ctx.user);
            }
            return {it->second.mu, it->second.sigma + s.epsilon};
        }
        case NormKind::instance:
        case NormKind::revin:
        case NormKind::cmin:
            return {ctx.stats.mu, ctx.stats.sigma + s.epsilon};
    }
    throw ConfigInvalid("normalize: unknown strategy kind");
}

const CminParams& cluster_params(const NormStrategy& s, const WindowContext& ctx) {
    auto it = s.clusters.find(ctx.cluster);
    if (it == s.clusters.end()) {
        throw MissingContext("cmin: no parameters for cluster '" + ctx.cluster + "'");
    }
    return it->second;
}

}  // namespace

const char* norm_kind_name(NormKind k) {
    switch (k) {
        case NormKind::none: return "none";
        case NormKind::standard: return "standard";
        case NormKind::minmax: return "minmax";
        case NormKind::relative: return "relative";
        case NormKind::per_user_standard: return "per_user_standard";
        case NormKind::instance: return "instance";
        case NormKind::revin: return "revin";
        case NormKind::cmin: return "cmin";
    }
    return "?";
}

NormKind norm_kind_from_name(const std::string& name) {
    for (NormKind k : {NormKind::none, NormKind::standard, NormKind::minmax,
                       NormKind::relative, NormKind::per_user_standard,
                       NormKind::instance, NormKind::revin, NormKind::cmin}) {
        if (name == norm_kind_name(k)) return k;
    }
    throw ConfigInvalid("unknown normalization strategy '" + name + "'");
}

std::vector<double> normalize(std::span<const double> x, const NormStrategy& s,
                              const WindowContext& ctx) {
    AffineMap m = resolve_map(s, ctx);
    if (std::abs(m.scale) < kScaleFloor) {
        throw ZeroScale("normalize: scale underflowed to zero");
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m.shift) / m.scale;

    if (s.kind == NormKind::revin) {
        for (double& v : out) v = s.affine.alpha * v + s.affine.beta;
    } else if (s.kind == NormKind::cmin) {
        const CminParams& c = cluster_params(s, ctx);
        for (double& v : out) v = c.gamma * v + c.nu;
    }
    return out;
}

std::vector<double> denormalize(std::span<const double> p, const NormStrategy& s,
                                const WindowContext& ctx) {
    std::vector<double> out(p.begin(), p.end());

    if (s.kind == NormKind::revin) {
        if (s.affine.alpha == 0.0) throw ZeroScale("denormalize: affine alpha is zero");
        for (double& v : out) v = (v - s.affine.beta) / s.affine.alpha;
    } else if (s.kind == NormKind::cmin) {
        const CminParams& c = cluster_params(s, ctx);
        if (c.gamma == 0.0) throw ZeroScale("denormalize: cluster gamma is zero");
        for (double& v : out) v = c.alpha * (v - c.nu) / c.gamma + c.beta;
    }

    AffineMap m = resolve_map(s, ctx);
    if (std::abs(m.scale) < kScaleFloor) {
        throw ZeroScale("denormalize: scale underflowed to zero");
    }
    for (double& v : out) v = v * m.scale + m.shift;
    return out;
}

std::vector<double> normalize_target(std::span<const double> y, const InstanceStats& stats,
                                     double epsilon) {
    double scale = stats.sigma + epsilon;
    if (std::abs(scale) < kScaleFloor) {
        throw ZeroScale("normalize_target: sigma + epsilon is zero");
    }
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - stats.mu) / scale;
    return out;
}

double denormalize_scale(const NormStrategy& s, const WindowContext& ctx) {
    AffineMap m = resolve_map(s, ctx);
    switch (s.kind) {
        case NormKind::revin:
            if (s.affine.alpha == 0.0) throw ZeroScale("denormalize_scale: alpha is zero");
            return m.scale / s.affine.alpha;
        case NormKind::cmin: {
            const CminParams& c = cluster_params(s, ctx);
            if (c.gamma == 0.0) throw ZeroScale("denormalize_scale: gamma is zero");
            return m.scale * c.alpha / c.gamma;
        }
        default:
            return m.scale;
    }
}

std::vector<double> to_normalized_space(std::span<const double> p, const NormStrategy& s,
                                        const WindowContext& ctx) {
    std::vector<double> out(p.begin(), p.end());
    switch (s.kind) {
        case NormKind::instance:
            return out;
        case NormKind::revin:
            if (s.affine.alpha == 0.0) throw ZeroScale("to_normalized_space: alpha is zero");
            for (double& v : out) v = (v - s.affine.beta) / s.affine.alpha;
            return out;
        case NormKind::cmin: {
            const CminParams& c = cluster_params(s, ctx);
            if (c.gamma == 0.0) throw ZeroScale("to_normalized_space: gamma is zero");
            for (double& v : out) v = c.alpha * (v - c.nu) / c.gamma + c.beta;
            return out;
        }
        default:
            throw InconsistentPipeline(
                "normalized-space loss needs an instance-statistics strategy");
    }
}

double to_normalized_scale(const NormStrategy& s, const WindowContext& ctx) {
    switch (s.kind) {
        case NormKind::instance:
            return 1.0;
        case NormKind::revin:
            if (s.affine.alpha == 0.0) throw ZeroScale("to_normalized_scale: alpha is zero");
            return 1.0 / s.affine.alpha;
        case NormKind::cmin: {
            const CminParams& c = cluster_params(s, ctx);
            if (c.gamma == 0.0) throw ZeroScale("to_normalized_scale: gamma is zero");
            return c.alpha / c.gamma;
        }
        default:
            throw InconsistentPipeline(
                "normalized-space loss needs an instance-statistics strategy");
    }
}

std::map<std::string, CminParams> cmin_init(
    const std::map<std::string, std::vector<WindowPair>>& cluster_pairs, double epsilon) {
    std::map<std::string, CminParams> out;
    for (const auto& [cluster, pairs] : cluster_pairs) {
        if (pairs.empty()) {
            throw EmptyCluster("cmin_init: cluster '" + cluster + "' has no training pairs");
        }
        double sum_delta = 0.0;
        double sum_lambda = 0.0;
        for (const auto& w : pairs) {
            Modulations m = modulations(w.x, w.y, epsilon);
            sum_delta += m.delta;
            sum_lambda += m.lambda;
        }
        CminParams p;  // input map stays identity
        p.beta = sum_delta / static_cast<double>(pairs.size());
        p.alpha = sum_lambda / static_cast<double>(pairs.size());
        out[cluster] = p;
    }
    return out;
}

std::string NormStrategy::to_json() const {
    nlohmann::json j;
    j["kind"] = norm_kind_name(kind);
    j["epsilon"] = epsilon;
    j["alpha"] = affine.alpha;
    j["beta"] = affine.beta;
    j["learnable_affine"] = learnable_affine;
    if (global) j["global"] = {{"mu", global->mu}, {"sigma", global->sigma}};
    if (minmax) j["minmax"] = {{"min", minmax->min}, {"max", minmax->max}};
    if (!per_user.empty()) {
        nlohmann::json t;
        for (const auto& [user, g] : per_user) {
            t[user] = {{"mu", g.mu}, {"sigma", g.sigma}};
        }
        j["per_user"] = t;
    }
    if (!clusters.empty()) {
        nlohmann::json t;
        for (const auto& [id, c] : clusters) {
            t[id] = {{"gamma", c.gamma}, {"nu", c.nu}, {"alpha", c.alpha}, {"beta", c.beta}};
        }
        j["clusters"] = t;
    }
    return j.dump(2);
}

NormStrategy NormStrategy::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigInvalid("strategy: malformed JSON document");
    NormStrategy s;
    try {
        s.kind = norm_kind_from_name(j.at("kind").get<std::string>());
        s.epsilon = j.at("epsilon").get<double>();
        s.affine.alpha = j.value("alpha", 1.0);
        s.affine.beta = j.value("beta", 0.0);
        s.learnable_affine = j.value("learnable_affine", false);
        if (j.contains("global")) {
            s.global = GlobalStats{j["global"].at("mu").get<double>(),
                                   j["global"].at("sigma").get<double>(), false};
        }
        if (j.contains("minmax")) {
            s.minmax = MinMaxParams{j["minmax"].at("min").get<double>(),
                                    j["minmax"].at("max").get<double>()};
        }
        if (j.contains("per_user")) {
            for (auto& [user, g] : j["per_user"].items()) {
                s.per_user[user] =
                    GlobalStats{g.at("mu").get<double>(), g.at("sigma").get<double>(), false};
            }
        }
        if (j.contains("clusters")) {
            for (auto& [id, c] : j["clusters"].items()) {
                s.clusters[id] =
                    CminParams{c.at("gamma").get<double>(), c.at("nu").get<double>(),
                               c.at("alpha").get<double>(), c.at("beta").get<double>()};
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(std::string("strategy: ") + e.what());
    }
    return s;
}

}  // namespace tsn
