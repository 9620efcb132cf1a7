#include "tsn/prepare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsn/rng.hpp"

namespace tsn {

namespace {

bool window_constant(const std::vector<double>& row, std::size_t start, std::size_t len) {
    double first = row[start];
    for (std::size_t i = 1; i < len; ++i) {
        if (row[start + i] != first) return false;
    }
    return true;
}

// Collapses a usability bitmap into ranges of unusable starts.
void append_ranges(std::vector<RemovalRow>& report, const std::string& user,
                   const std::vector<std::uint8_t>& usable, const std::string& reason) {
    std::size_t i = 0;
    while (i < usable.size()) {
        if (usable[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < usable.size() && !usable[j]) ++j;
        report.push_back({user, i, j, reason});
        i = j;
    }
}

}  // namespace

CleanedDataset clean_dataset(const TimeSeriesDataset& data, const WindowSpec& spec,
                             double drop_threshold) {
    spec.validate();
    data.validate();
    const std::size_t L = spec.lookback;
    if (data.num_steps() < L) {
        throw PeriodTooShort("clean_dataset: series shorter than the look-back");
    }
    const std::size_t starts = data.num_steps() - L + 1;

    CleanedDataset out;
    out.lookback = L;

    for (std::size_t u = 0; u < data.num_users(); ++u) {
        std::vector<std::uint8_t> usable(starts, 1);
        std::size_t kept = 0;
        for (std::size_t s = 0; s < starts; ++s) {
            if (window_constant(data.values[u], s, L)) {
                usable[s] = 0;
            } else {
                ++kept;
            }
        }
        double fraction = static_cast<double>(kept) / static_cast<double>(starts);
        if (fraction < drop_threshold) {
            out.report.push_back({data.user_ids[u], 0, data.num_steps(), "user_dropped"});
            continue;
        }
        append_ranges(out.report, data.user_ids[u], usable, "constant_window");
        out.data.user_ids.push_back(data.user_ids[u]);
        out.data.values.push_back(data.values[u]);
        out.data.mask.push_back(data.mask[u]);
        out.usable.push_back(std::move(usable));
    }
    out.data.frequency = data.frequency;
    return out;
}

SplitAssignment six_way_split(const TimeSeriesDataset& data, double user_out_fraction,
                              const std::array<double, 3>& period_fractions,
                              const WindowSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t num_users = data.num_users();
    if (num_users < 2) {
        throw TooFewUsers("six_way_split: need at least 2 users to hold some out");
    }
    if (user_out_fraction <= 0.0 || user_out_fraction >= 1.0) {
        throw ConfigInvalid("six_way_split: user_out_fraction must lie in (0, 1)");
    }
    double fraction_sum = period_fractions[0] + period_fractions[1] + period_fractions[2];
    if (std::abs(fraction_sum - 1.0) > 1e-9) {
        throw ConfigInvalid("six_way_split: period fractions must sum to 1");
    }

    std::vector<std::size_t> order(num_users);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x51u));
    rng.shuffle(order);

    auto n_out = static_cast<std::size_t>(
        std::floor(static_cast<double>(num_users) * user_out_fraction));
    n_out = std::clamp<std::size_t>(n_out, 1, num_users - 1);

    SplitAssignment a;
    a.users_out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_out));
    a.users_in.assign(order.begin() + static_cast<std::ptrdiff_t>(n_out), order.end());
    std::sort(a.users_out.begin(), a.users_out.end());
    std::sort(a.users_in.begin(), a.users_in.end());

    const auto steps = static_cast<double>(data.num_steps());
    auto b1 = static_cast<std::size_t>(std::floor(steps * period_fractions[0]));
    auto b2 = static_cast<std::size_t>(
        std::floor(steps * (period_fractions[0] + period_fractions[1])));
    a.t_train = {0, b1};
    a.t_valid = {b1, b2};
    a.t_test = {b2, data.num_steps()};

    const std::size_t need = spec.total();
    for (const auto* p : {&a.t_train, &a.t_valid, &a.t_test}) {
        if (p->length() < need) {
            throw PeriodTooShort("six_way_split: a period holds fewer than L+H points");
        }
    }
    return a;
}

namespace {

// Usable start positions for one user so that [start, start+L+H) stays
// inside the period.
std::vector<std::size_t> usable_starts(const CleanedDataset& data, std::size_t user,
                                       const PeriodRange& period, const WindowSpec& spec) {
    std::vector<std::size_t> starts;
    if (period.length() < spec.total()) return starts;
    std::size_t last = period.end - spec.total();
    for (std::size_t s = period.begin; s <= last; ++s) {
        if (data.start_usable(user, s)) starts.push_back(s);
    }
    return starts;
}

void check_spec(const CleanedDataset& data, const WindowSpec& spec) {
    spec.validate();
    if (data.lookback != spec.lookback) {
        throw InconsistentPipeline(
            "window sampling: dataset was cleaned for a different look-back length");
    }
}

}  // namespace

std::vector<WindowPair> sample_windows(const CleanedDataset& data,
                                       const SplitAssignment& assignment, Split split,
                                       const WindowSpec& spec, std::size_t n,
                                       std::uint64_t seed) {
    check_spec(data, spec);
    std::vector<WindowPair> out;
    if (n == 0) return out;

    const PeriodRange& period = assignment.period_of(split);
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> pools;
    for (std::size_t u : assignment.users_of(split)) {
        auto starts = usable_starts(data, u, period, spec);
        if (!starts.empty()) pools.emplace_back(u, std::move(starts));
    }
    if (pools.empty()) {
        throw NoUsableWindows("sample_windows: no usable window in this split");
    }

    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(split)));
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [u, starts] = pools[i % pools.size()];
        std::size_t pick = starts[rng.next_below(starts.size())];
        out.push_back(cut_window(data.data, u, pick, spec));
    }
    return out;
}

std::vector<WindowPair> enumerate_eval_windows(const CleanedDataset& data,
                                               const SplitAssignment& assignment,
                                               Split split, const WindowSpec& spec) {
    check_spec(data, spec);
    const PeriodRange& period = assignment.period_of(split);
    std::vector<WindowPair> out;
    if (period.length() < spec.total()) return out;
    std::size_t last = period.end - spec.total();
    for (std::size_t u : assignment.users_of(split)) {
        for (std::size_t s = period.begin; s <= last; s += spec.horizon) {
            if (data.start_usable(u, s)) {
                out.push_back(cut_window(data.data, u, s, spec));
            }
        }
    }
    return out;
}

}  // namespace tsn
