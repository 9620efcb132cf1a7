#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tsn/dataset.hpp"

namespace tsn {

// One removed stretch of look-back start positions, end exclusive.
struct RemovalRow {
    std::string user;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string reason;  // "constant_window" or "user_dropped"
};

/**
 * Dataset plus the sampling eligibility computed by cleaning.  usable[u][t]
 * says whether the length-L look-back starting at t is usable (non-constant).
 * The eligibility is tied to the look-back length it was scanned with.
 */
struct CleanedDataset {
    TimeSeriesDataset data;
    std::size_t lookback = 0;
    std::vector<std::vector<std::uint8_t>> usable;  // [user][start], size T-L+1
    std::vector<RemovalRow> report;

    bool start_usable(std::size_t user, std::size_t start) const {
        return usable[user][start] != 0;
    }
};

/**
 * Marks every constant length-L look-back unusable and drops users whose
 * usable fraction of start positions falls below `drop_threshold`.  Constant
 * stretches typically come from missing readings stored as zeros.  Rows of
 * the removal report cover ranges of start positions.
 */
CleanedDataset clean_dataset(const TimeSeriesDataset& data, const WindowSpec& spec,
                             double drop_threshold = 0.5);

/**
 * Six-way split: users are shuffled with `seed` and the first
 * floor(U * user_out_fraction) of them (clamped so both sides stay
 * non-empty) are held out; time is cut into train/valid/test prefix,
 * middle and suffix periods by `period_fractions`, remainder accruing to
 * the suffix.  Every period must hold at least L+H points.
 */
SplitAssignment six_way_split(const TimeSeriesDataset& data, double user_out_fraction,
                              const std::array<double, 3>& period_fractions,
                              const WindowSpec& spec, std::uint64_t seed);

/**
 * Draws n window pairs from a split: users are visited round-robin and each
 * visit picks a uniform usable start such that the whole window lies inside
 * the split's period.  Sampling is with replacement.  Users with no usable
 * start are skipped; if no user has one, NoUsableWindows is thrown.
 */
std::vector<WindowPair> sample_windows(const CleanedDataset& data,
                                       const SplitAssignment& assignment, Split split,
                                       const WindowSpec& spec, std::size_t n,
                                       std::uint64_t seed);

/**
 * Deterministic evaluation enumeration: for every user of the split, usable
 * windows starting at period.begin, period.begin + H, ... so consecutive
 * horizons tile the period without overlap.
 */
std::vector<WindowPair> enumerate_eval_windows(const CleanedDataset& data,
                                               const SplitAssignment& assignment,
                                               Split split, const WindowSpec& spec);

}  // namespace tsn
