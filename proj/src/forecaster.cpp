#include "tsn/forecaster.hpp"

#include <cmath>

#include <json.hpp>

#include "tsn/rng.hpp"

namespace tsn {

const char* model_kind_name(ModelKind k) {
    return k == ModelKind::linear ? "linear" : "dlinear";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "linear") return ModelKind::linear;
    if (name == "dlinear") return ModelKind::dlinear;
    throw ConfigInvalid("unknown model kind '" + name + "'");
}

void moving_average_decompose(std::span<const double> x, std::size_t kernel,
                              std::vector<double>& trend, std::vector<double>& residual) {
    if (kernel % 2 == 0 || kernel == 0) {
        throw BadKernel("moving average kernel must be odd and positive");
    }
    const std::size_t n = x.size();
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    trend.resize(n);
    residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            auto idx = static_cast<std::ptrdiff_t>(i) + j;
            if (idx < 0) idx = 0;
            if (idx >= static_cast<std::ptrdiff_t>(n)) idx = static_cast<std::ptrdiff_t>(n) - 1;
            sum += x[static_cast<std::size_t>(idx)];
        }
        trend[i] = sum / static_cast<double>(kernel);
        residual[i] = x[i] - trend[i];
    }
}

std::size_t LinearForecaster::num_params() const {
    return w_seasonal.a.size() + w_trend.a.size() + bias.size();
}

LinearForecaster init_forecaster(ModelKind kind, std::size_t lookback, std::size_t horizon,
                                 std::size_t ma_kernel, std::uint64_t seed) {
    if (lookback < 2 || horizon < 1) {
        throw ConfigInvalid("forecaster: need look-back >= 2 and horizon >= 1");
    }
    if (kind == ModelKind::dlinear && (ma_kernel % 2 == 0 || ma_kernel == 0)) {
        throw BadKernel("forecaster: moving average kernel must be odd");
    }
    LinearForecaster m;
    m.kind = kind;
    m.lookback = lookback;
    m.horizon = horizon;
    m.ma_kernel = ma_kernel;
    m.w_seasonal = Matrix(horizon, lookback);
    if (kind == ModelKind::dlinear) m.w_trend = Matrix(horizon, lookback);
    m.bias.assign(horizon, 0.0);

    Rng rng(derive_seed(seed, 0x1217u));
    double bound = 1.0 / static_cast<double>(lookback);
    for (double& w : m.w_seasonal.a) w = rng.next_range(-bound, bound);
    for (double& w : m.w_trend.a) w = rng.next_range(-bound, bound);
    return m;
}

std::vector<double> forward(const LinearForecaster& model, std::span<const double> x) {
    if (x.size() != model.lookback) {
        throw ShapeMismatch("forward: input length differs from the model's look-back");
    }
    const std::size_t h = model.horizon;
    const std::size_t l = model.lookback;
    std::vector<double> out(model.bias);

    if (model.kind == ModelKind::linear) {
        for (std::size_t r = 0; r < h; ++r) {
            const double* row = &model.w_seasonal.a[r * l];
            double acc = 0.0;
            for (std::size_t c = 0; c < l; ++c) acc += row[c] * x[c];
            out[r] += acc;
        }
        return out;
    }

    std::vector<double> trend;
    std::vector<double> residual;
    moving_average_decompose(x, model.ma_kernel, trend, residual);
    for (std::size_t r = 0; r < h; ++r) {
        const double* rs = &model.w_seasonal.a[r * l];
        const double* rt = &model.w_trend.a[r * l];
        double acc = 0.0;
        for (std::size_t c = 0; c < l; ++c) acc += rs[c] * residual[c] + rt[c] * trend[c];
        out[r] += acc;
    }
    return out;
}

ModelGrads::ModelGrads(const LinearForecaster& m)
    : w_seasonal(m.w_seasonal.rows, m.w_seasonal.cols),
      w_trend(m.w_trend.rows, m.w_trend.cols),
      bias(m.bias.size(), 0.0) {}

void ModelGrads::scale(double f) {
    for (double& g : w_seasonal.a) g *= f;
    for (double& g : w_trend.a) g *= f;
    for (double& g : bias) g *= f;
}

namespace {

// Transpose of the replicated-edge moving average: scatters each output
// gradient back over its averaging window.
void ma_transpose_apply(std::span<const double> g, std::size_t kernel,
                        std::vector<double>& out) {
    const std::size_t n = g.size();
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    out.assign(n, 0.0);
    const double inv_k = 1.0 / static_cast<double>(kernel);
    for (std::size_t i = 0; i < n; ++i) {
        double v = g[i] * inv_k;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            auto idx = static_cast<std::ptrdiff_t>(i) + j;
            if (idx < 0) idx = 0;
            if (idx >= static_cast<std::ptrdiff_t>(n)) idx = static_cast<std::ptrdiff_t>(n) - 1;
            out[static_cast<std::size_t>(idx)] += v;
        }
    }
}

}  // namespace

void accumulate_sample_grads(const LinearForecaster& model, std::span<const double> input,
                             std::span<const double> dloss_doutput, ModelGrads& grads,
                             std::vector<double>* input_grad) {
    const std::size_t h = model.horizon;
    const std::size_t l = model.lookback;
    if (input.size() != l || dloss_doutput.size() != h) {
        throw ShapeMismatch("accumulate_sample_grads: shape mismatch");
    }

    if (model.kind == ModelKind::linear) {
        for (std::size_t r = 0; r < h; ++r) {
            double g = dloss_doutput[r];
            grads.bias[r] += g;
            double* row = &grads.w_seasonal.a[r * l];
            for (std::size_t c = 0; c < l; ++c) row[c] += g * input[c];
        }
        if (input_grad) {
            input_grad->assign(l, 0.0);
            for (std::size_t r = 0; r < h; ++r) {
                double g = dloss_doutput[r];
                const double* row = &model.w_seasonal.a[r * l];
                for (std::size_t c = 0; c < l; ++c) (*input_grad)[c] += g * row[c];
            }
        }
        return;
    }

    std::vector<double> trend;
    std::vector<double> residual;
    moving_average_decompose(input, model.ma_kernel, trend, residual);
    for (std::size_t r = 0; r < h; ++r) {
        double g = dloss_doutput[r];
        grads.bias[r] += g;
        double* gs = &grads.w_seasonal.a[r * l];
        double* gt = &grads.w_trend.a[r * l];
        for (std::size_t c = 0; c < l; ++c) {
            gs[c] += g * residual[c];
            gt[c] += g * trend[c];
        }
    }
    if (input_grad) {
        // d/dv = (I - M)^T Ws^T g + M^T Wt^T g, with M the averaging map.
        std::vector<double> gs(l, 0.0);
        std::vector<double> gt(l, 0.0);
        for (std::size_t r = 0; r < h; ++r) {
            double g = dloss_doutput[r];
            const double* rs = &model.w_seasonal.a[r * l];
            const double* rt = &model.w_trend.a[r * l];
            for (std::size_t c = 0; c < l; ++c) {
                gs[c] += g * rs[c];
                gt[c] += g * rt[c];
            }
        }
        std::vector<double> diff(l);
        for (std::size_t c = 0; c < l; ++c) diff[c] = gt[c] - gs[c];
        std::vector<double> scattered;
        ma_transpose_apply(diff, model.ma_kernel, scattered);
        input_grad->assign(l, 0.0);
        for (std::size_t c = 0; c < l; ++c) (*input_grad)[c] = gs[c] + scattered[c];
    }
}

ModelGrads gradients(const LinearForecaster& model,
                     const std::vector<std::vector<double>>& inputs,
                     const std::vector<std::vector<double>>& targets) {
    if (inputs.size() != targets.size() || inputs.empty()) {
        throw ShapeMismatch("gradients: batch inputs and targets must pair up");
    }
    ModelGrads grads(model);
    const double norm =
        2.0 / (static_cast<double>(inputs.size()) * static_cast<double>(model.horizon));
    std::vector<double> dloss(model.horizon);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (targets[i].size() != model.horizon) {
            throw ShapeMismatch("gradients: target length differs from horizon");
        }
        std::vector<double> p = forward(model, inputs[i]);
        for (std::size_t r = 0; r < model.horizon; ++r) {
            dloss[r] = norm * (p[r] - targets[i][r]);
        }
        accumulate_sample_grads(model, inputs[i], dloss, grads);
    }
    return grads;
}

AdamState::AdamState(const LinearForecaster& model, const AdamConfig& cfg) : config(cfg) {
    std::size_t n = model.num_params() + 2;  // trailing slots: alpha, beta
    m.assign(n, 0.0);
    v.assign(n, 0.0);
}

namespace {

void adam_update(double& p, double g, double& m, double& v, const AdamConfig& c,
                 double bc1, double bc2) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    double mhat = m / bc1;
    double vhat = v / bc2;
    p -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
}

}  // namespace

void adam_step(LinearForecaster& model, const ModelGrads& grads, AdamState& state,
               const double* affine_grads, double* alpha, double* beta) {
    if (state.m.size() != model.num_params() + 2) {
        throw ShapeMismatch("adam_step: state was built for a different model");
    }
    ++state.step;
    const AdamConfig& c = state.config;
    double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    std::size_t k = 0;
    auto run = [&](double* params, const double* gs, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i, ++k) {
            adam_update(params[i], gs[i], state.m[k], state.v[k], c, bc1, bc2);
        }
    };
    run(model.w_seasonal.a.data(), grads.w_seasonal.a.data(), model.w_seasonal.a.size());
    run(model.w_trend.a.data(), grads.w_trend.a.data(), model.w_trend.a.size());
    run(model.bias.data(), grads.bias.data(), model.bias.size());
    if (affine_grads && alpha && beta) {
        adam_update(*alpha, affine_grads[0], state.m[k], state.v[k], c, bc1, bc2);
        ++k;
        adam_update(*beta, affine_grads[1], state.m[k], state.v[k], c, bc1, bc2);
    }
}

std::string LinearForecaster::to_json() const {
    nlohmann::json j;
    j["kind"] = model_kind_name(kind);
    j["lookback"] = lookback;
    j["horizon"] = horizon;
    j["ma_kernel"] = ma_kernel;
    j["w_seasonal"] = w_seasonal.a;
    j["w_trend"] = w_trend.a;
    j["bias"] = bias;
    return j.dump();
}

LinearForecaster LinearForecaster::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigInvalid("model: malformed JSON document");
    LinearForecaster m;
    try {
        m.kind = model_kind_from_name(j.at("kind").get<std::string>());
        m.lookback = j.at("lookback").get<std::size_t>();
        m.horizon = j.at("horizon").get<std::size_t>();
        m.ma_kernel = j.at("ma_kernel").get<std::size_t>();
        m.w_seasonal = Matrix(m.horizon, m.lookback);
        m.w_seasonal.a = j.at("w_seasonal").get<std::vector<double>>();
        auto wt = j.at("w_trend").get<std::vector<double>>();
        if (!wt.empty()) {
            m.w_trend = Matrix(m.horizon, m.lookback);
            m.w_trend.a = std::move(wt);
        }
        m.bias = j.at("bias").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(std::string("model: ") + e.what());
    }
    if (m.w_seasonal.a.size() != m.horizon * m.lookback ||
        (m.kind == ModelKind::dlinear && m.w_trend.a.size() != m.horizon * m.lookback) ||
        m.bias.size() != m.horizon) {
        throw ShapeMismatch("model: parameter arrays do not match the declared shape");
    }
    return m;
}

}  // namespace tsn
