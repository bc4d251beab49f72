#pragma once

#include <cmath>
#include <unordered_map>

#include "cuqgnn/models/parameters.hpp"

namespace cuq {

/// Adam with L2 weight decay folded into the gradient.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// One update of `p` from gradient `g`; `decay` is the L2 coefficient for this tensor.
    void step(const std::string& name, Tensor& p, const Tensor& g, double decay) {
        State& s = state_[name];
        if (s.m.size() != p.size()) s = {Tensor(p.rows(), p.cols()), Tensor(p.rows(), p.cols()), 0};
        ++s.t;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i] + decay * p[i];
            s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
            s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
            p[i] -= lr_ * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + eps_);
        }
    }

private:
    struct State {
        Tensor m, v;
        long t = 0;
    };
    double lr_, beta1_, beta2_, eps_;
    std::unordered_map<std::string, State> state_;
};

}  // namespace cuq
