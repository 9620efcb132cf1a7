#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsn/errors.hpp"

namespace tsn {

// Dense row-major matrix, just enough for direct multi-step linear heads.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

enum class ModelKind {
    linear,   // single map: y = W x + b
    dlinear,  // trend/seasonal split: y = Wt * trend(x) + Ws * residual(x) + b
};

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

/**
 * Moving-average split of a series into trend and residual.  The kernel is a
 * centered box of odd length; edges are padded by replicating the first and
 * last value.  trend + residual reproduces the input exactly.
 */
void moving_average_decompose(std::span<const double> x, std::size_t kernel,
                              std::vector<double>& trend, std::vector<double>& residual);

/**
 * Direct multi-step linear forecaster over a length-L input.  The dlinear
 * variant applies separate heads to the trend and residual components of the
 * input; the linear variant is a single head.
 */
struct LinearForecaster {
    ModelKind kind = ModelKind::linear;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::size_t ma_kernel = 25;  // dlinear only; odd

    Matrix w_seasonal;          // H x L (the only head for `linear`)
    Matrix w_trend;             // H x L, dlinear only
    std::vector<double> bias;   // H

    std::size_t num_params() const;

    std::string to_json() const;
    static LinearForecaster from_json(const std::string& text);
};

// Weights i.i.d. uniform in [-1/L, 1/L], bias zero; deterministic in `seed`.
LinearForecaster init_forecaster(ModelKind kind, std::size_t lookback, std::size_t horizon,
                                 std::size_t ma_kernel, std::uint64_t seed);

std::vector<double> forward(const LinearForecaster& model, std::span<const double> x);

// Gradient buffers shaped like the model.
struct ModelGrads {
    Matrix w_seasonal;
    Matrix w_trend;
    std::vector<double> bias;

    explicit ModelGrads(const LinearForecaster& m);
    void scale(double f);
};

/**
 * Exact gradients of the mean-over-batch, mean-over-horizon squared error
 * between forward(inputs[i]) and targets[i] with respect to every model
 * parameter.
 */
ModelGrads gradients(const LinearForecaster& model,
                     const std::vector<std::vector<double>>& inputs,
                     const std::vector<std::vector<double>>& targets);

// Contribution of one sample given dLoss/d(output); shares the forward
// decomposition so pipeline losses can reuse it.  Returns dLoss/d(input)
// in `input_grad` when non-null.
void accumulate_sample_grads(const LinearForecaster& model, std::span<const double> input,
                             std::span<const double> dloss_doutput, ModelGrads& grads,
                             std::vector<double>* input_grad = nullptr);

struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/**
 * Adam state for a forecaster plus one optional (alpha, beta) affine pair
 * trained alongside it.  First and second moment estimates are stored per
 * parameter; bias correction uses the shared step count.
 */
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<double> m;  // flat: w_seasonal, w_trend, bias, alpha, beta
    std::vector<double> v;

    AdamState() = default;
    AdamState(const LinearForecaster& model, const AdamConfig& cfg);
};

// One Adam update of the model (and the affine pair when `affine_grads`
// is non-null) from the given gradients.
void adam_step(LinearForecaster& model, const ModelGrads& grads, AdamState& state,
               const double* affine_grads = nullptr, double* alpha = nullptr,
               double* beta = nullptr);

}  // namespace tsn
