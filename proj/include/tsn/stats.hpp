#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsn/dataset.hpp"

namespace tsn {

// Mean / standard deviation fitted once over a pool of look-back values.
struct GlobalStats {
    double mu = 0.0;
    double sigma = 1.0;
    bool degenerate = false;  // sigma collapsed to epsilon (all points equal)
};

// Training-pool minimum / maximum.
struct MinMaxParams {
    double min = 0.0;
    double max = 1.0;
};

// Per-window mean and unbiased standard deviation of the look-back.
struct InstanceStats {
    double mu = 0.0;
    double sigma = 0.0;
};

// Level / scale modulation of the horizon relative to its look-back:
// delta = (mu_y - mu_x) / (sigma_x + eps), lambda = sigma_y / (sigma_x + eps).
struct Modulations {
    double delta = 0.0;
    double lambda = 0.0;
};

/**
 * Grand mean and unbiased deviation over all look-back points of all windows.
 * The divisor is (total points - 1).  Needs at least 2 points.  When every
 * point is identical the returned sigma is `epsilon` and the result is
 * flagged degenerate (a warning is emitted rather than throwing).
 */
GlobalStats fit_global_stats(const std::vector<WindowPair>& train_windows,
                             double epsilon = 1e-6);

// Same statistic restricted to each user's windows.  Keys are user ids.
std::map<std::string, GlobalStats> fit_per_user_stats(
    const std::vector<WindowPair>& train_windows,
    const std::vector<std::string>& user_ids, double epsilon = 1e-6);

// Minimum / maximum over all look-back points of all windows.
MinMaxParams fit_minmax(const std::vector<WindowPair>& train_windows);

// Mean and unbiased standard deviation of one look-back (length >= 2).
InstanceStats instance_stats(std::span<const double> x);

// Modulations of a (look-back, horizon) pair; both lengths must be >= 2 so
// the unbiased deviations exist.
Modulations modulations(std::span<const double> x, std::span<const double> y,
                        double epsilon = 1e-6);

}  // namespace tsn
