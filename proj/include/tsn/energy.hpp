#pragma once

#include <vector>

namespace tsn {

/**
 * Squared energy distance between two point samples under the kernel
 * k(a, b) = -||a - b||:
 *
 *   d^2 = 2 E||A - B|| - E||A - A'|| - E||B - B'||
 *
 * Both classical estimators are returned.  `vstat` is the plug-in statistic
 * (within-sample means over all n^2 pairs); it is non-negative and exactly
 * zero when the two samples are the same multiset.  `ustat` excludes the
 * i = j pairs from the within-sample means, making it unbiased but free to
 * dip slightly below zero for close distributions.
 */
struct EnergyDistance {
    double vstat = 0.0;
    double ustat = 0.0;
};

/**
 * O(n^2) evaluation with Euclidean norms.  Each sample needs at least two
 * points and all points must share one dimension.  Summation order is
 * canonical in the arguments' contents, so energy_distance(p, q) and
 * energy_distance(q, p) are bit-identical.
 */
EnergyDistance energy_distance(const std::vector<std::vector<double>>& p,
                               const std::vector<std::vector<double>>& q);

}  // namespace tsn
