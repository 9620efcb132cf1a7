#include "tsn/energy.hpp"

#include <cmath>

#include "tsn/errors.hpp"

namespace tsn {

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double ss = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double d = a[k] - b[k];
        ss += d * d;
    }
    return std::sqrt(ss);
}

// Full row-major sum over all pairs.  The diagonal of a within-sample sum
// contributes exact zeros, so the same value serves both estimators; using
// one summation shape for within and cross terms is what makes the plug-in
// statistic cancel bit-exactly on identical samples.
double pair_sum(const std::vector<std::vector<double>>& a,
                const std::vector<std::vector<double>>& b) {
    double sum = 0.0;
    for (const auto& x : a) {
        double row = 0.0;
        for (const auto& y : b) row += euclidean(x, y);
        sum += row;
    }
    return sum;
}

// Canonical argument order: by size, then lexicographically by contents.
// Keeps summation and subtraction order identical for (p, q) and (q, p).
bool before(const std::vector<std::vector<double>>& p,
            const std::vector<std::vector<double>>& q) {
    if (p.size() != q.size()) return p.size() < q.size();
    return p <= q;
}

}  // namespace

EnergyDistance energy_distance(const std::vector<std::vector<double>>& p,
                               const std::vector<std::vector<double>>& q) {
    if (p.size() < 2 || q.size() < 2) {
        throw TooFewSamples("energy_distance: each sample needs at least 2 points");
    }
    const std::size_t dim = p.front().size();
    for (const auto& v : p) {
        if (v.size() != dim) throw DimensionMismatch("energy_distance: ragged sample");
    }
    for (const auto& v : q) {
        if (v.size() != dim) throw DimensionMismatch("energy_distance: dimension mismatch");
    }

    const bool p_first = before(p, q);
    const auto m = static_cast<double>(p.size());
    const auto n = static_cast<double>(q.size());
    const double spp = pair_sum(p, p);
    const double sqq = pair_sum(q, q);
    const double spq = p_first ? pair_sum(p, q) : pair_sum(q, p);
    const double cross = 2.0 * spq / (m * n);

    const double vp = spp / (m * m);
    const double vq = sqq / (n * n);
    const double up = spp / (m * (m - 1.0));
    const double uq = sqq / (n * (n - 1.0));

    EnergyDistance d;
    if (p_first) {
        d.vstat = cross - vp - vq;
        d.ustat = cross - up - uq;
    } else {
        d.vstat = cross - vq - vp;
        d.ustat = cross - uq - up;
    }
    return d;
}

}  // namespace tsn
