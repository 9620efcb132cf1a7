#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "tsn/dataset.hpp"

using namespace tsn;

namespace {

TimeSeriesDataset two_user_data() {
    TimeSeriesDataset d;
    d.user_ids = {"a", "b"};
    d.values = {{1, 2, 3, 4, 5, 6}, {10, 20, 30, 40, 50, 60}};
    d.mask = {{1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1}};
    return d;
}

}  // namespace

TEST_CASE("window spec validation") {
    CHECK_THROWS_AS((WindowSpec{1, 1}).validate(), ConfigInvalid);
    CHECK_THROWS_AS((WindowSpec{2, 0}).validate(), ConfigInvalid);
    CHECK_NOTHROW((WindowSpec{2, 1}).validate());
    CHECK((WindowSpec{3, 2}).total() == 5);
}

TEST_CASE("cut_window slices look-back and horizon") {
    TimeSeriesDataset d = two_user_data();
    WindowPair w = cut_window(d, 1, 1, WindowSpec{3, 2});
    CHECK(w.user == 1);
    CHECK(w.start == 1);
    CHECK(w.x == std::vector<double>{20, 30, 40});
    CHECK(w.y == std::vector<double>{50, 60});
}

TEST_CASE("dataset validate catches ragged rows") {
    TimeSeriesDataset d = two_user_data();
    d.values[1].pop_back();
    CHECK_THROWS_AS(d.validate(), ShapeMismatch);
}

TEST_CASE("dataset validate catches nonzero masked entries") {
    TimeSeriesDataset d = two_user_data();
    d.mask[0][2] = 0;
    d.values[0][2] = 3.0;  // should be stored as 0 when masked
    CHECK_THROWS_AS(d.validate(), ShapeMismatch);
    d.values[0][2] = 0.0;
    CHECK_NOTHROW(d.validate());
}

TEST_CASE("split names are stable identifiers") {
    CHECK(std::string(split_name(Split::Train)) == "Train");
    CHECK(std::string(split_name(Split::Valid1)) == "Valid1");
    CHECK(std::string(split_name(Split::Valid2)) == "Valid2");
    CHECK(std::string(split_name(Split::Valid3)) == "Valid3");
    CHECK(std::string(split_name(Split::Test1)) == "Test1");
    CHECK(std::string(split_name(Split::Test2)) == "Test2");
}

TEST_CASE("split assignment routes users and periods") {
    SplitAssignment s;
    s.users_in = {0, 2};
    s.users_out = {1};
    s.t_train = {0, 10};
    s.t_valid = {10, 14};
    s.t_test = {14, 20};

    CHECK(s.users_of(Split::Train) == s.users_in);
    CHECK(s.users_of(Split::Valid1) == s.users_in);
    CHECK(s.users_of(Split::Test1) == s.users_in);
    CHECK(s.users_of(Split::Valid2) == s.users_out);
    CHECK(s.users_of(Split::Valid3) == s.users_out);
    CHECK(s.users_of(Split::Test2) == s.users_out);

    CHECK(s.period_of(Split::Train).begin == 0);
    CHECK(s.period_of(Split::Valid2).begin == 0);   // held-out users, train dates
    CHECK(s.period_of(Split::Valid1).begin == 10);
    CHECK(s.period_of(Split::Valid3).begin == 10);
    CHECK(s.period_of(Split::Test1).begin == 14);
    CHECK(s.period_of(Split::Test2).begin == 14);
    CHECK(s.period_of(Split::Test2).length() == 6);
}
