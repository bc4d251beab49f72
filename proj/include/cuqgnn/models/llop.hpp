#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cuqgnn/uqcore/dirichlet.hpp"

namespace cuq {

namespace detail {

inline void check_pool_weights(std::size_t n_beliefs, std::span<const double> weights) {
    if (n_beliefs == 0 || weights.size() != n_beliefs) throw DimensionError("pooling needs one weight per belief");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DomainError("pooling weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("pooling weights must sum to 1");
}

}  // namespace detail

/// Pseudo-count average sum_j w_j alpha_j.
inline DirichletBelief llop_pool(std::span<const DirichletBelief> beliefs, std::span<const double> weights) {
    detail::check_pool_weights(beliefs.size(), weights);
    std::vector<double> a(beliefs.front().n_classes(), 0.0);
    for (std::size_t j = 0; j < beliefs.size(); ++j) {
        if (beliefs[j].n_classes() != a.size()) throw DimensionError("pooled beliefs differ in class count");
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += weights[j] * beliefs[j].alpha(k);
    }
    return DirichletBelief(std::move(a));
}

/// Normalized weighted geometric mean of the densities, (1/Z) prod_j Q_j(theta)^{w_j},
/// with log Z = log B(sum_j w_j alpha_j) - sum_j w_j log B(alpha_j).
inline double llop_pool_density(std::span<const DirichletBelief> beliefs, std::span<const double> weights,
                                std::span<const double> theta) {
    detail::check_pool_weights(beliefs.size(), weights);
    double log_product = 0.0;
    double log_z = 0.0;
    std::vector<double> pooled(theta.size(), 0.0);
    for (std::size_t j = 0; j < beliefs.size(); ++j) {
        if (weights[j] == 0.0) continue;
        log_product += weights[j] * dirichlet_log_density(beliefs[j].alpha(), theta);
        log_z -= weights[j] * special::log_beta(beliefs[j].alpha());
        for (std::size_t k = 0; k < theta.size(); ++k) pooled[k] += weights[j] * beliefs[j].alpha(k);
    }
    log_z += special::log_beta(pooled);
    return std::exp(log_product - log_z);
}

}  // namespace cuq
