#include "tsn/stats.hpp"

#include <cmath>
#include <limits>

namespace tsn {

namespace {

// Two-pass mean / sum of squared deviations over a collection of spans.
struct Accumulator {
    double sum = 0.0;
    std::size_t count = 0;

    void add(std::span<const double> xs) {
        for (double v : xs) sum += v;
        count += xs.size();
    }
};

GlobalStats finish_global(double mean, double ss, std::size_t n, double epsilon) {
    GlobalStats g;
    g.mu = mean;
    double var = ss / static_cast<double>(n - 1);
    g.sigma = std::sqrt(var);
    if (g.sigma == 0.0) {
        g.sigma = epsilon;
        g.degenerate = true;
        warn("global statistics are degenerate (constant data); sigma set to epsilon");
    }
    return g;
}

}  // namespace

GlobalStats fit_global_stats(const std::vector<WindowPair>& train_windows, double epsilon) {
    Accumulator acc;
    for (const auto& w : train_windows) acc.add(w.x);
    if (acc.count < 2) {
        throw TooFewSamples("fit_global_stats: need at least 2 look-back points");
    }
    double mean = acc.sum / static_cast<double>(acc.count);
    double ss = 0.0;
    for (const auto& w : train_windows) {
        for (double v : w.x) {
            double d = v - mean;
            ss += d * d;
        }
    }
    return finish_global(mean, ss, acc.count, epsilon);
}

std::map<std::string, GlobalStats> fit_per_user_stats(
    const std::vector<WindowPair>& train_windows,
    const std::vector<std::string>& user_ids, double epsilon) {
    std::map<std::size_t, std::vector<const WindowPair*>> by_user;
    for (const auto& w : train_windows) by_user[w.user].push_back(&w);

    std::map<std::string, GlobalStats> out;
    for (const auto& [u, ws] : by_user) {
        if (u >= user_ids.size()) {
            throw DimensionMismatch("fit_per_user_stats: window user index out of range");
        }
        Accumulator acc;
        for (const auto* w : ws) acc.add(w->x);
        if (acc.count < 2) {
            throw TooFewSamples("fit_per_user_stats: user " + user_ids[u] +
                                " has fewer than 2 look-back points");
        }
        double mean = acc.sum / static_cast<double>(acc.count);
        double ss = 0.0;
        for (const auto* w : ws) {
            for (double v : w->x) {
                double d = v - mean;
                ss += d * d;
            }
        }
        out[user_ids[u]] = finish_global(mean, ss, acc.count, epsilon);
    }
    return out;
}

MinMaxParams fit_minmax(const std::vector<WindowPair>& train_windows) {
    MinMaxParams p;
    p.min = std::numeric_limits<double>::infinity();
    p.max = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (const auto& w : train_windows) {
        for (double v : w.x) {
            p.min = std::min(p.min, v);
            p.max = std::max(p.max, v);
        }
        count += w.x.size();
    }
    if (count == 0) throw TooFewSamples("fit_minmax: no look-back points");
    return p;
}

InstanceStats instance_stats(std::span<const double> x) {
    if (x.size() < 2) {
        throw TooFewSamples("instance_stats: look-back must hold at least 2 points");
    }
    double sum = 0.0;
    for (double v : x) sum += v;
    InstanceStats s;
    s.mu = sum / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        double d = v - s.mu;
        ss += d * d;
    }
    s.sigma = std::sqrt(ss / static_cast<double>(x.size() - 1));
    return s;
}

Modulations modulations(std::span<const double> x, std::span<const double> y,
                        double epsilon) {
    InstanceStats sx = instance_stats(x);
    InstanceStats sy = instance_stats(y);
    Modulations m;
    m.delta = (sy.mu - sx.mu) / (sx.sigma + epsilon);
    m.lambda = sy.sigma / (sx.sigma + epsilon);
    return m;
}

}  // namespace tsn
