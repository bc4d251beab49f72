#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "cuqgnn/diffnum/tape.hpp"

namespace cuq {

/// Scalar-valued function of one differentiable input, built on the input's tape.
using ScalarFn = std::function<Var(const Var&)>;

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero gradients from
/// producing meaningless ratios.
inline double gradient_relative_error(double analytic, double numeric, double floor = 1e-3) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

/// Largest relative error between the reverse-mode gradient of `f` at `x` and
/// the central difference (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
inline double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5) {
    Tensor analytic;
    {
        Tape tape;
        Var in = tape.leaf(x);
        Var out = f(in);
        tape.backward(out);
        analytic = tape.grad(in);
    }

    auto eval = [&](const Tensor& at) {
        Tape tape;
        Var in = tape.leaf(at, false);
        return f(in).value().item();
    };

    double worst = 0.0;
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + eps;
        const double up = eval(probe);
        probe[i] = x[i] - eps;
        const double down = eval(probe);
        probe[i] = x[i];
        const double numeric = (up - down) / (2.0 * eps);
        worst = std::max(worst, gradient_relative_error(analytic[i], numeric));
    }
    return worst;
}

}  // namespace cuq
