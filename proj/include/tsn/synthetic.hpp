#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsn/dataset.hpp"
#include "tsn/stats.hpp"

namespace tsn {

// One user's generating process: x_t = a*t + b + A*sin(2*pi*t/T) + noise,
// noise ~ N(0, sigma_noise^2).
struct SyntheticUserParams {
    double trend = 0.0;        // a
    double offset = 0.0;       // b
    double amplitude = 1.0;    // A
    double period = 10.0;      // T, in steps
    double sigma_noise = 0.0;  // noise standard deviation
};

// A cluster of users sharing base parameters; per-user uniform jitter is
// applied to the trend and offset only.
struct SyntheticCluster {
    std::size_t count = 0;
    SyntheticUserParams base;
    double jitter_trend = 0.0;   // a drawn from base.trend +- jitter_trend
    double jitter_offset = 0.0;  // b drawn from base.offset +- jitter_offset
};

struct SyntheticSpec {
    std::size_t length = 0;
    std::vector<SyntheticCluster> clusters;
    std::uint64_t seed = 0;
};

struct SyntheticDataset {
    TimeSeriesDataset data;
    std::map<std::string, std::string> labels;  // user id -> cluster id
};

// Deterministic series for one user; the same seed always yields the same
// values.
std::vector<double> generate_user(const SyntheticUserParams& params, std::size_t length,
                                  std::uint64_t seed);

// All clusters' users, ids "u<index>", cluster ids "c<index>".  Per-user
// seeds and jitters derive from spec.seed, so the dataset is reproducible
// as a whole.
SyntheticDataset generate_dataset(const SyntheticSpec& spec);

/**
 * Closed-form expected modulations of a window pair drawn from the process,
 * treating the look-back variance as trend^2*L^2/12 + amplitude^2/2 +
 * sigma_noise^2 (and the horizon alike with H):
 *
 *   delta  = trend*(L+H)/2 / (sqrt(var_x) + eps)
 *   lambda = sqrt(var_y) / (sqrt(var_x) + eps)
 *
 * The approximation assumes the period divides both L and H so the sinusoid
 * contributes no level shift; a warning is emitted otherwise.
 */
Modulations closed_form_modulations(const SyntheticUserParams& params, std::size_t lookback,
                                    std::size_t horizon, double epsilon = 1e-6);

}  // namespace tsn
