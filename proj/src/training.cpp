#include "tsn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "tsn/rng.hpp"

namespace tsn {

namespace {

// Seed stream tags for the independent random decisions of one run.
constexpr std::uint64_t kFitStream = 0xF17;
constexpr std::uint64_t kInitStream = 0x171;
constexpr std::uint64_t kEpochStream = 0xE90;

}  // namespace

const char* bp_space_name(BpSpace s) {
    return s == BpSpace::data ? "data" : "normalized";
}

BpSpace bp_space_from_name(const std::string& name) {
    if (name == "data") return BpSpace::data;
    if (name == "normalized") return BpSpace::normalized;
    throw ConfigInvalid("unknown backpropagation space '" + name + "'");
}

WindowContext make_context(const WindowPair& w, const TimeSeriesDataset& data,
                           const std::map<std::string, std::string>* labels) {
    WindowContext ctx;
    ctx.stats = instance_stats(w.x);
    ctx.user = data.user_ids.at(w.user);
    if (labels) {
        auto it = labels->find(ctx.user);
        if (it != labels->end()) ctx.cluster = it->second;
    }
    return ctx;
}

double compute_loss(const std::vector<std::vector<double>>& model_outputs,
                    const std::vector<std::vector<double>>& targets,
                    const std::vector<WindowContext>& contexts, const NormStrategy& strategy,
                    BpSpace space) {
    if (model_outputs.size() != targets.size() || model_outputs.size() != contexts.size() ||
        model_outputs.empty()) {
        throw ShapeMismatch("compute_loss: outputs, targets and contexts must pair up");
    }
    double sum = 0.0;
    std::size_t elements = 0;
    for (std::size_t i = 0; i < model_outputs.size(); ++i) {
        if (model_outputs[i].size() != targets[i].size()) {
            throw ShapeMismatch("compute_loss: output and target lengths differ");
        }
        std::vector<double> c;
        std::vector<double> t;
        if (space == BpSpace::data) {
            c = denormalize(model_outputs[i], strategy, contexts[i]);
            t = targets[i];
        } else {
            c = to_normalized_space(model_outputs[i], strategy, contexts[i]);
            t = normalize_target(targets[i], contexts[i].stats, strategy.epsilon);
        }
        for (std::size_t h = 0; h < c.size(); ++h) {
            double d = c[h] - t[h];
            sum += d * d;
        }
        elements += c.size();
    }
    return sum / static_cast<double>(elements);
}

double pipeline_loss_and_grads(const LinearForecaster& model, const NormStrategy& strategy,
                               BpSpace space, const std::vector<WindowPair>& batch,
                               const std::vector<WindowContext>& contexts,
                               ModelGrads* grads, double* affine_grads) {
    if (batch.size() != contexts.size() || batch.empty()) {
        throw ShapeMismatch("pipeline_loss_and_grads: batch and contexts must pair up");
    }
    const bool learnable =
        strategy.kind == NormKind::revin && strategy.learnable_affine && affine_grads;
    if (affine_grads) {
        affine_grads[0] = 0.0;
        affine_grads[1] = 0.0;
    }

    const double inv_bh =
        1.0 / (static_cast<double>(batch.size()) * static_cast<double>(model.horizon));
    double loss = 0.0;
    std::vector<double> dldc(model.horizon);
    std::vector<double> dldp(model.horizon);
    std::vector<double> dldv;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const WindowPair& w = batch[i];
        const WindowContext& ctx = contexts[i];
        std::vector<double> v = normalize(w.x, strategy, ctx);
        std::vector<double> p = forward(model, v);

        std::vector<double> c;
        std::vector<double> t;
        double dcdp = 0.0;
        if (space == BpSpace::data) {
            c = denormalize(p, strategy, ctx);
            t = w.y;
            dcdp = denormalize_scale(strategy, ctx);
        } else {
            c = to_normalized_space(p, strategy, ctx);
            t = normalize_target(w.y, ctx.stats, strategy.epsilon);
            dcdp = to_normalized_scale(strategy, ctx);
        }

        for (std::size_t h = 0; h < model.horizon; ++h) {
            double d = c[h] - t[h];
            loss += d * d;
            dldc[h] = 2.0 * d * inv_bh;
            dldp[h] = dldc[h] * dcdp;
        }
        if (!grads) continue;

        accumulate_sample_grads(model, v, dldp, *grads, learnable ? &dldv : nullptr);

        if (learnable) {
            const double alpha = strategy.affine.alpha;
            const double beta = strategy.affine.beta;
            // Input path: v = alpha * z + beta.
            for (std::size_t k = 0; k < v.size(); ++k) {
                double z = (v[k] - beta) / alpha;
                affine_grads[0] += dldv[k] * z;
                affine_grads[1] += dldv[k];
            }
            // Output path: c = dcdp_scale applied to (p - beta) / alpha.
            for (std::size_t h = 0; h < model.horizon; ++h) {
                affine_grads[0] += dldc[h] * (-dcdp * (p[h] - beta) / alpha);
                affine_grads[1] += dldc[h] * (-dcdp);
            }
        }
    }
    return loss * inv_bh;
}

NormStrategy fit_strategy(const NormStrategy& base, const TrainInputs& inputs,
                          const WindowSpec& spec, std::size_t fit_samples,
                          std::uint64_t seed) {
    NormStrategy s = base;
    const bool needs_fit = s.kind == NormKind::standard || s.kind == NormKind::relative ||
                           s.kind == NormKind::minmax ||
                           s.kind == NormKind::per_user_standard || s.kind == NormKind::cmin;
    if (!needs_fit) return s;

    auto windows = sample_windows(*inputs.data, *inputs.split, Split::Train, spec,
                                  fit_samples, derive_seed(seed, kFitStream));
    switch (s.kind) {
        case NormKind::standard:
        case NormKind::relative:
            s.global = fit_global_stats(windows, s.epsilon);
            break;
        case NormKind::minmax:
            s.minmax = fit_minmax(windows);
            break;
        case NormKind::per_user_standard:
            s.per_user = fit_per_user_stats(windows, inputs.data->data.user_ids, s.epsilon);
            s.global = fit_global_stats(windows, s.epsilon);  // fallback for unseen users
            break;
        case NormKind::cmin: {
            if (!inputs.labels) {
                throw MissingContext("cmin requires user-to-cluster labels");
            }
            std::map<std::string, std::vector<WindowPair>> by_cluster;
            for (auto& w : windows) {
                const std::string& user = inputs.data->data.user_ids.at(w.user);
                auto it = inputs.labels->find(user);
                if (it == inputs.labels->end()) {
                    throw MissingContext("cmin: no cluster label for user " + user);
                }
                by_cluster[it->second].push_back(std::move(w));
            }
            s.clusters = cmin_init(by_cluster, s.epsilon);
            break;
        }
        default:
            break;
    }
    return s;
}

MetricTable evaluate(const LinearForecaster& model, const NormStrategy& strategy,
                     const TrainInputs& inputs, const WindowSpec& spec,
                     const std::vector<Split>& splits) {
    MetricTable table;
    for (Split split : splits) {
        auto windows = enumerate_eval_windows(*inputs.data, *inputs.split, split, spec);
        SplitMetrics m;
        double se_sum = 0.0;
        double nse_sum = 0.0;
        for (const auto& w : windows) {
            WindowContext ctx = make_context(w, inputs.data->data, inputs.labels);
            std::vector<double> v = normalize(w.x, strategy, ctx);
            std::vector<double> p = forward(model, v);
            std::vector<double> yhat = denormalize(p, strategy, ctx);
            double se = 0.0;
            for (std::size_t h = 0; h < w.y.size(); ++h) {
                double d = yhat[h] - w.y[h];
                se += d * d;
            }
            double scale = ctx.stats.sigma + strategy.epsilon;
            se_sum += se;
            nse_sum += se / (scale * scale);
        }
        if (!windows.empty()) {
            double n = static_cast<double>(windows.size()) * static_cast<double>(spec.horizon);
            m.mse = se_sum / n;
            m.nmse = nse_sum / n;
            m.windows = windows.size();
        }
        table[split] = m;
    }
    return table;
}

namespace {

double selection_metric(const SplitMetrics& m, BpSpace space) {
    return space == BpSpace::normalized ? m.nmse : m.mse;
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainInputs& inputs) {
    if (!inputs.data || !inputs.split) {
        throw ConfigInvalid("train: missing dataset or split assignment");
    }
    config.window.validate();
    if (config.batch_size == 0 || config.steps_per_epoch == 0) {
        throw ConfigInvalid("train: batch_size and steps_per_epoch must be positive");
    }
    if (config.bp_space == BpSpace::normalized && !config.strategy.uses_instance_stats()) {
        throw InconsistentPipeline(
            "train: normalized-space loss needs an instance-statistics strategy");
    }

    TrainResult result;
    result.strategy =
        fit_strategy(config.strategy, inputs, config.window, config.fit_samples, config.seed);
    result.model =
        init_forecaster(config.model_kind, config.window.lookback, config.window.horizon,
                        config.ma_kernel, derive_seed(config.seed, kInitStream));

    AdamState adam(result.model, config.adam);
    const std::size_t valid_every =
        config.valid_every > 0 ? config.valid_every : std::max<std::size_t>(1, config.epochs / 20);
    const bool learnable =
        result.strategy.kind == NormKind::revin && result.strategy.learnable_affine;

    LinearForecaster best_model = result.model;
    AffineParams best_affine = result.strategy.affine;
    double best_metric = std::numeric_limits<double>::infinity();
    bool have_best = false;

    const std::size_t per_epoch = config.batch_size * config.steps_per_epoch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto windows = sample_windows(*inputs.data, *inputs.split, Split::Train, config.window,
                                      per_epoch, derive_seed(config.seed, kEpochStream, epoch));
        std::vector<WindowContext> contexts;
        contexts.reserve(windows.size());
        for (const auto& w : windows) {
            contexts.push_back(make_context(w, inputs.data->data, inputs.labels));
        }

        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < config.steps_per_epoch; ++step) {
            auto first = static_cast<std::ptrdiff_t>(step * config.batch_size);
            std::vector<WindowPair> batch(windows.begin() + first,
                                          windows.begin() + first +
                                              static_cast<std::ptrdiff_t>(config.batch_size));
            std::vector<WindowContext> batch_ctx(
                contexts.begin() + first,
                contexts.begin() + first + static_cast<std::ptrdiff_t>(config.batch_size));

            ModelGrads grads(result.model);
            double affine_grads[2] = {0.0, 0.0};
            epoch_loss += pipeline_loss_and_grads(result.model, result.strategy,
                                                  config.bp_space, batch, batch_ctx, &grads,
                                                  learnable ? affine_grads : nullptr);
            adam_step(result.model, grads, adam, learnable ? affine_grads : nullptr,
                      &result.strategy.affine.alpha, &result.strategy.affine.beta);
        }

        HistoryRow row;
        row.epoch = epoch;
        row.train_loss = epoch_loss / static_cast<double>(config.steps_per_epoch);
        if ((epoch + 1) % valid_every == 0 || epoch + 1 == config.epochs) {
            MetricTable val = evaluate(result.model, result.strategy, inputs, config.window,
                                       {Split::Valid1});
            row.val_mse = val[Split::Valid1].mse;
            row.val_nmse = val[Split::Valid1].nmse;
            double metric = selection_metric(val[Split::Valid1], config.bp_space);
            if (!have_best || metric < best_metric) {
                best_metric = metric;
                best_model = result.model;
                best_affine = result.strategy.affine;
                have_best = true;
            }
        }
        result.history.push_back(row);
    }

    if (have_best) {
        result.model = best_model;
        result.strategy.affine = best_affine;
    }
    result.metrics = evaluate(result.model, result.strategy, inputs, config.window,
                              {Split::Valid1, Split::Valid2, Split::Valid3, Split::Test1,
                               Split::Test2});
    return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataUnreadable("cannot write history CSV: " + path);
    out.precision(17);
    out << "epoch,loss,val_mse,val_nmse\n";
    for (const auto& row : history) {
        out << row.epoch << ',' << row.train_loss << ',';
        if (row.val_mse) out << *row.val_mse;
        out << ',';
        if (row.val_nmse) out << *row.val_nmse;
        out << '\n';
    }
}

}  // namespace tsn
