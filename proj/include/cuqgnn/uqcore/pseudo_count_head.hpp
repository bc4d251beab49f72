#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cuqgnn/uqcore/dirichlet.hpp"
#include "cuqgnn/uqcore/radial_flow.hpp"

namespace cuq {

inline constexpr double kDefaultMaxLogDensity = 30.0;

/// Class-conditional flows turned into Dirichlet pseudo-counts:
/// alpha_k = 1 + budget * exp(log p(z | k)) * prior_k.
struct PseudoCountHead {
    std::vector<RadialFlowStack> flows;  // one per class
    std::vector<double> priors;
    double budget = 1.0;
    double max_log_density = kDefaultMaxLogDensity;

    void validate() const {
        if (flows.size() < 2 || flows.size() != priors.size()) {
            throw DimensionError("head needs one flow and one prior per class (K >= 2)");
        }
        const double total = std::accumulate(priors.begin(), priors.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) throw DomainError("class priors must sum to 1");
        if (!std::isfinite(budget) || budget < 0.0) throw DomainError("certainty budget must be finite and >= 0");
    }
};

/// Differentiable pseudo-counts for every row of `z` (N x d) -> N x K.
/// Log-densities are clamped at `max_log_density` before exponentiation;
/// `saturated` (optional) counts the clamped entries.
inline Var pseudo_count_alpha(const Var& z, const std::vector<std::vector<RadialLayerVars>>& flows,
                              std::span<const double> priors, double budget, double max_log_density,
                              std::size_t* saturated = nullptr) {
    using namespace ad;
    Var log_density;
    for (const auto& flow : flows) {
        Var lp = radial_flow_log_density(z, flow);
        log_density = log_density.valid() ? concat_cols(log_density, lp) : lp;
    }
    Tensor weight(1, priors.size());
    for (std::size_t k = 0; k < priors.size(); ++k) weight[k] = budget * priors[k];
    Var w = z.tape().constant(std::move(weight));
    return exp(clamp_max(log_density, max_log_density, saturated)) * w + 1.0;
}

inline DirichletBelief pseudo_counts(const PseudoCountHead& head, std::span<const double> z,
                                     std::size_t* saturated = nullptr) {
    head.validate();
    Tape tape;
    Var zv = tape.constant(Tensor(1, z.size(), std::vector<double>(z.begin(), z.end())));
    std::vector<std::vector<RadialLayerVars>> flows;
    for (const auto& f : head.flows) {
        if (f.dim != z.size()) throw DimensionError("pseudo_counts: latent dimension mismatch");
        flows.push_back(bind_constant(tape, f));
    }
    Var alpha = pseudo_count_alpha(zv, flows, head.priors, head.budget, head.max_log_density, saturated);
    const Tensor& a = alpha.value();
    return DirichletBelief(std::vector<double>(a.data().begin(), a.data().end()));
}

}  // namespace cuq
