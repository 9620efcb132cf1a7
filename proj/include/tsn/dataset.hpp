#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tsn/errors.hpp"

namespace tsn {

/**
 * Aligned multi-user univariate panel.
 *
 * values[u][t] is user u's reading at step t; mask[u][t] is false where the
 * reading was missing.  Missing entries hold the value 0 so that windows can
 * be cut without branching; cleaning later removes the constant stretches
 * this produces.
 */
struct TimeSeriesDataset {
    std::vector<std::string> user_ids;
    std::vector<std::vector<double>> values;  // [user][time]
    std::vector<std::vector<std::uint8_t>> mask;
    std::string frequency;  // informational, e.g. "1h"

    std::size_t num_users() const { return values.size(); }
    std::size_t num_steps() const { return values.empty() ? 0 : values.front().size(); }

    // Shape consistency: every row (values and mask) has the same length and
    // masked-off entries hold 0.
    void validate() const;
};

// Look-back / horizon lengths for windowing.  L >= 2 so that an unbiased
// standard deviation exists; H >= 1.
struct WindowSpec {
    std::size_t lookback = 0;
    std::size_t horizon = 0;

    std::size_t total() const { return lookback + horizon; }

    void validate() const {
        if (lookback < 2) throw ConfigInvalid("window: look-back must be >= 2");
        if (horizon < 1) throw ConfigInvalid("window: horizon must be >= 1");
    }
};

// One (look-back, horizon) sample cut from a user's series at `start`.
struct WindowPair {
    std::vector<double> x;  // length L
    std::vector<double> y;  // length H
    std::size_t user = 0;   // index into TimeSeriesDataset::user_ids
    std::size_t start = 0;  // time index of x.front()
};

// Half-open time interval [begin, end).
struct PeriodRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
};

// The six evaluation regimes arising from {seen, unseen users} x
// {train, validation, test dates}.
enum class Split {
    Train,   // seen users, train dates
    Valid1,  // seen users, validation dates
    Valid2,  // unseen users, train dates
    Valid3,  // unseen users, validation dates
    Test1,   // seen users, test dates
    Test2,   // unseen users, test dates
};

const char* split_name(Split s);

struct SplitAssignment {
    std::vector<std::size_t> users_in;   // user indices kept for training
    std::vector<std::size_t> users_out;  // user indices held out entirely
    PeriodRange t_train;
    PeriodRange t_valid;
    PeriodRange t_test;

    const std::vector<std::size_t>& users_of(Split s) const;
    const PeriodRange& period_of(Split s) const;
};

// Extracts the window pair starting at `start` for user `u`.
WindowPair cut_window(const TimeSeriesDataset& data, std::size_t u, std::size_t start,
                      const WindowSpec& spec);

}  // namespace tsn
