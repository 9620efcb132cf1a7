#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsn/forecaster.hpp"
#include "tsn/normalize.hpp"
#include "tsn/prepare.hpp"

namespace tsn {

// Space the squared-error objective lives in.  `data` compares fully
// denormalized predictions with raw targets; `normalized` compares the
// model's output, mapped back through the output affine only, with
// (y - mu_x) / (sigma_x + eps).  The normalized space exists only for
// instance-statistics strategies.
enum class BpSpace {
    data,
    normalized,
};

const char* bp_space_name(BpSpace s);
BpSpace bp_space_from_name(const std::string& name);

struct TrainConfig {
    WindowSpec window;
    NormStrategy strategy;
    BpSpace bp_space = BpSpace::data;

    ModelKind model_kind = ModelKind::linear;
    std::size_t ma_kernel = 25;

    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    std::size_t steps_per_epoch = 10;
    std::size_t valid_every = 0;     // 0 -> max(1, epochs / 20)
    std::size_t fit_samples = 2048;  // windows used to fit strategy parameters

    AdamConfig adam{.lr = 1e-3};
    std::uint64_t seed = 1;
};

struct TrainInputs {
    const CleanedDataset* data = nullptr;
    const SplitAssignment* split = nullptr;
    const std::map<std::string, std::string>* labels = nullptr;  // user -> cluster
};

struct SplitMetrics {
    double mse = 0.0;
    double nmse = 0.0;
    std::size_t windows = 0;
};

using MetricTable = std::map<Split, SplitMetrics>;

struct HistoryRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_mse;
    std::optional<double> val_nmse;
};

struct TrainResult {
    LinearForecaster model;
    NormStrategy strategy;  // fitted, including any learned affine
    MetricTable metrics;    // of the selected model, all evaluation splits
    std::vector<HistoryRow> history;
};

// Builds the per-window context (instance statistics, user id, cluster
// label) evaluation and training share.
WindowContext make_context(const WindowPair& w, const TimeSeriesDataset& data,
                           const std::map<std::string, std::string>* labels);

/**
 * Mean-over-batch, mean-over-horizon squared error of raw model outputs
 * against targets, measured in the requested space.  The contexts carry the
 * per-window statistics the space mappings need.
 */
double compute_loss(const std::vector<std::vector<double>>& model_outputs,
                    const std::vector<std::vector<double>>& targets,
                    const std::vector<WindowContext>& contexts, const NormStrategy& strategy,
                    BpSpace space);

/**
 * Loss plus exact gradients of the full pipeline for one batch: normalize,
 * forward, map to the comparison space, squared error.  When the strategy's
 * affine is learnable its gradient flows through both the input map and the
 * output map; `affine_grads` then receives d/d(alpha, beta).
 */
double pipeline_loss_and_grads(const LinearForecaster& model, const NormStrategy& strategy,
                               BpSpace space, const std::vector<WindowPair>& batch,
                               const std::vector<WindowContext>& contexts,
                               ModelGrads* grads, double* affine_grads);

/**
 * Fits whatever the strategy needs from sampled training windows: global
 * statistics, min/max bounds, per-user tables (with a global fallback for
 * unseen users) or cluster-conditioned affines.
 */
NormStrategy fit_strategy(const NormStrategy& base, const TrainInputs& inputs,
                          const WindowSpec& spec, std::size_t fit_samples,
                          std::uint64_t seed);

/**
 * Full training loop: fit the strategy, then run seeded mini-batch Adam for
 * the configured epochs, validating every `valid_every` epochs and keeping
 * the checkpoint with the best validation metric (nMSE when training in the
 * normalized space, MSE otherwise).  epochs = 0 returns the initialized
 * model with its metrics.
 */
TrainResult train(const TrainConfig& config, const TrainInputs& inputs);

/**
 * Deterministic evaluation over exhaustively enumerated stride-H windows of
 * each requested split.  MSE is measured on denormalized predictions; nMSE
 * rescales each window's squared error by (sigma_x + eps)^-2.
 */
MetricTable evaluate(const LinearForecaster& model, const NormStrategy& strategy,
                     const TrainInputs& inputs, const WindowSpec& spec,
                     const std::vector<Split>& splits);

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

}  // namespace tsn
