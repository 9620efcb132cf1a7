#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "tsn/rng.hpp"

using namespace tsn;

TEST_CASE("same seed reproduces the exact sequence") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("next_unit stays in [0, 1)") {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        double u = r.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("next_below respects the bound and hits every residue") {
    Rng r(99);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t v = r.next_below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("next_below n=1 always returns 0") {
    Rng r(5);
    for (int i = 0; i < 100; ++i) CHECK(r.next_below(1) == 0);
}

TEST_CASE("next_range covers the interval") {
    Rng r(11);
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 10000; ++i) {
        double v = r.next_range(-2.0, 3.0);
        CHECK(v >= -2.0);
        CHECK(v < 3.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo < -1.9);
    CHECK(hi > 2.9);
}

TEST_CASE("gaussian moments") {
    Rng r(42);
    const int n = 200000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        double g = r.next_gaussian();
        sum += g;
        sum2 += g * g;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    // 5 sigma bands around the exact moments
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / double(n)));
}

TEST_CASE("shuffle permutes without loss") {
    Rng r(3);
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<int> orig = v;
    r.shuffle(v);
    CHECK(v != orig);  // 1/10! chance of a false alarm, fixed seed makes it stable
    std::sort(v.begin(), v.end());
    CHECK(v == orig);
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 50; ++s) seeds.insert(derive_seed(1, s));
    CHECK(seeds.size() == 50);
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2, 3) == derive_seed(derive_seed(1, 2), 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}
