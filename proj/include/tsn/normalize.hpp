#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsn/stats.hpp"

namespace tsn {

enum class NormKind {
    none,
    standard,           // global (x - mu) / (sigma + eps)
    minmax,             // global (x - min) / (max - min + eps)
    relative,           // global x / (mu + eps)
    per_user_standard,  // standard with per-user statistics
    instance,           // per-window (x - mu_x) / (sigma_x + eps)
    revin,              // instance plus output affine alpha * z + beta
    cmin,               // instance with per-cluster input/output affines
};

const char* norm_kind_name(NormKind k);
NormKind norm_kind_from_name(const std::string& name);

// Output affine of the reversible instance scheme.
struct AffineParams {
    double alpha = 1.0;
    double beta = 0.0;
};

// Cluster-conditioned affines: the input map uses (gamma, nu), the output
// map uses (alpha, beta).  With the identity values the scheme reduces to
// plain instance normalization.
struct CminParams {
    double gamma = 1.0;
    double nu = 0.0;
    double alpha = 1.0;
    double beta = 0.0;
};

/**
 * A normalization strategy plus everything fitted for it.  Global statistics,
 * min/max bounds, per-user tables and per-cluster affines are populated by
 * the fitting step that owns the training windows; window-level statistics
 * arrive per call through WindowContext.
 */
struct NormStrategy {
    NormKind kind = NormKind::none;
    double epsilon = 1e-6;

    AffineParams affine;            // revin
    bool learnable_affine = false;  // revin: train alpha/beta with the model

    std::optional<GlobalStats> global;             // standard, relative
    std::optional<MinMaxParams> minmax;            // minmax
    std::map<std::string, GlobalStats> per_user;   // per_user_standard
    std::map<std::string, CminParams> clusters;    // cmin

    bool uses_instance_stats() const {
        return kind == NormKind::instance || kind == NormKind::revin ||
               kind == NormKind::cmin;
    }

    std::string to_json() const;
    static NormStrategy from_json(const std::string& text);
};

// Per-window side information for normalize/denormalize.
struct WindowContext {
    InstanceStats stats;  // of the window's look-back
    std::string user;     // needed by per_user_standard
    std::string cluster;  // needed by cmin
};

// Applies the strategy's forward map to a series segment.
std::vector<double> normalize(std::span<const double> x, const NormStrategy& s,
                              const WindowContext& ctx);

// Inverts the strategy's map on model outputs.  For the cluster-conditioned
// scheme this is not the algebraic inverse of normalize: the output map is
// y = (sigma_x + eps) * (alpha * (p - nu) / gamma + beta) + mu_x.
std::vector<double> denormalize(std::span<const double> p, const NormStrategy& s,
                                const WindowContext& ctx);

// Target seen by a model trained in the normalized space:
// (y - mu_x) / (sigma_x + eps) with the look-back's statistics.
std::vector<double> normalize_target(std::span<const double> y, const InstanceStats& stats,
                                     double epsilon);

// d denormalize(p) / dp: the per-window linear coefficient of the inverse
// map.  Exact, for analytic gradient propagation.
double denormalize_scale(const NormStrategy& s, const WindowContext& ctx);

// Model output mapped into the plain normalized space (the point compared
// against normalize_target's output): identity for instance, (p - beta) /
// alpha for the affine scheme, alpha * (p - nu) / gamma + beta for the
// cluster-conditioned one.  Only instance-statistics strategies have this
// map; others raise InconsistentPipeline.
std::vector<double> to_normalized_space(std::span<const double> p, const NormStrategy& s,
                                        const WindowContext& ctx);
double to_normalized_scale(const NormStrategy& s, const WindowContext& ctx);

/**
 * Analytic initialization of the cluster-conditioned affines: the input map
 * starts at identity and the output map at the expected modulations of the
 * cluster's training pairs, (beta, alpha) = E[(delta, lambda)].
 */
std::map<std::string, CminParams> cmin_init(
    const std::map<std::string, std::vector<WindowPair>>& cluster_pairs,
    double epsilon = 1e-6);

}  // namespace tsn
