#include "tsn/dataset.hpp"

namespace tsn {

void TimeSeriesDataset::validate() const {
    if (values.size() != user_ids.size() || mask.size() != user_ids.size()) {
        throw ShapeMismatch("dataset: values/mask/user_ids row counts differ");
    }
    const std::size_t steps = num_steps();
    for (std::size_t u = 0; u < values.size(); ++u) {
        if (values[u].size() != steps || mask[u].size() != steps) {
            throw ShapeMismatch("dataset: ragged rows for user " + user_ids[u]);
        }
        for (std::size_t t = 0; t < steps; ++t) {
            if (!mask[u][t] && values[u][t] != 0.0) {
                throw ShapeMismatch("dataset: masked entry holds a non-zero value");
            }
        }
    }
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "Train";
        case Split::Valid1: return "Valid1";
        case Split::Valid2: return "Valid2";
        case Split::Valid3: return "Valid3";
        case Split::Test1: return "Test1";
        case Split::Test2: return "Test2";
    }
    return "?";
}

const std::vector<std::size_t>& SplitAssignment::users_of(Split s) const {
    switch (s) {
        case Split::Train:
        case Split::Valid1:
        case Split::Test1: return users_in;
        default: return users_out;
    }
}

const PeriodRange& SplitAssignment::period_of(Split s) const {
    switch (s) {
        case Split::Train:
        case Split::Valid2: return t_train;
        case Split::Valid1:
        case Split::Valid3: return t_valid;
        default: return t_test;
    }
}

WindowPair cut_window(const TimeSeriesDataset& data, std::size_t u, std::size_t start,
                      const WindowSpec& spec) {
    if (u >= data.num_users() || start + spec.total() > data.num_steps()) {
        throw DimensionMismatch("cut_window: window exceeds dataset bounds");
    }
    WindowPair w;
    w.user = u;
    w.start = start;
    const auto& row = data.values[u];
    w.x.assign(row.begin() + static_cast<std::ptrdiff_t>(start),
               row.begin() + static_cast<std::ptrdiff_t>(start + spec.lookback));
    w.y.assign(row.begin() + static_cast<std::ptrdiff_t>(start + spec.lookback),
               row.begin() + static_cast<std::ptrdiff_t>(start + spec.total()));
    return w;
}

}  // namespace tsn
