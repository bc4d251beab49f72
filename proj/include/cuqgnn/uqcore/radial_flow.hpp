#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "cuqgnn/diffnum/tape.hpp"

namespace cuq {

/// One radial layer f(z) = z + beta h(r) (z - z0), h(r) = 1 / (a + r).
///
/// The layer stores unconstrained parameters: a = softplus(raw_scale) > 0 and
/// beta = -a + softplus(raw_beta) > -a, which keeps every layer invertible.
struct RadialLayer {
    Tensor center;  // 1 x d
    double raw_scale = 0.0;
    double raw_beta = 0.0;

    double scale() const { return ad::softplus_value(raw_scale); }
    double beta() const { return -scale() + ad::softplus_value(raw_beta); }
};

/// softplus^-1(1): the raw value that makes a == 1 and, for raw_beta, beta == 0.
inline const double kSoftplusInverseOne = std::log(std::numbers::e - 1.0);

/// Stack of radial layers over a standard-normal base in `dim` dimensions.
struct RadialFlowStack {
    std::size_t dim = 0;
    std::vector<RadialLayer> layers;

    /// Centers ~ N(0, 0.1^2); scale and beta start at a = 1, beta = 0 (identity map).
    static RadialFlowStack initialized(std::size_t dim, std::size_t depth, std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, 0.1);
        RadialFlowStack s;
        s.dim = dim;
        for (std::size_t l = 0; l < depth; ++l) {
            RadialLayer layer{Tensor(1, dim), kSoftplusInverseOne, kSoftplusInverseOne};
            for (std::size_t j = 0; j < dim; ++j) layer.center[j] = normal(rng);
            s.layers.push_back(std::move(layer));
        }
        return s;
    }
};

/// Layer parameters bound to a tape.
struct RadialLayerVars {
    Var center;     // 1 x d
    Var raw_scale;  // 1 x 1
    Var raw_beta;   // 1 x 1
};

/// Per-row log density of the flow: log N(f(z); 0, I) + sum_l log|det J_l|,
/// with log|det J| = (d - 1) log(1 + beta h) + log(1 + beta h - beta r / (a + r)^2).
/// `z` is N x d; the result is N x 1.
inline Var radial_flow_log_density(const Var& z, std::span<const RadialLayerVars> layers) {
    using namespace ad;
    const double d = static_cast<double>(z.cols());
    Var u = z;
    Var log_det;
    for (const RadialLayerVars& layer : layers) {
        Var a = softplus(layer.raw_scale);
        Var beta = softplus(layer.raw_beta) - a;
        Var diff = u - layer.center;
        Var r = sqrt(row_sum(square(diff)));
        Var h = reciprocal(a + r);
        Var bh = beta * h;
        u = u + bh * diff;
        Var term = scale(log(bh + 1.0), d - 1.0) + log((bh - beta * r * square(h)) + 1.0);
        log_det = log_det.valid() ? log_det + term : term;
    }
    const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi);
    Var base = add_scalar(scale(row_sum(square(u)), -0.5), log_norm);
    return log_det.valid() ? base + log_det : base;
}

/// Binds a value-form stack to `tape` as constants.
inline std::vector<RadialLayerVars> bind_constant(Tape& tape, const RadialFlowStack& s) {
    std::vector<RadialLayerVars> out;
    for (const RadialLayer& l : s.layers) {
        out.push_back({tape.constant(l.center), tape.constant(Tensor::scalar(l.raw_scale)),
                       tape.constant(Tensor::scalar(l.raw_beta))});
    }
    return out;
}

/// log p(z) of a single point.
inline double flow_log_density(const RadialFlowStack& s, std::span<const double> z) {
    if (z.size() != s.dim) throw DimensionError("flow_log_density: point dimension mismatch");
    Tape tape;
    Var zv = tape.constant(Tensor(1, z.size(), std::vector<double>(z.begin(), z.end())));
    const auto layers = bind_constant(tape, s);
    return radial_flow_log_density(zv, layers).value().item();
}

}  // namespace cuq
