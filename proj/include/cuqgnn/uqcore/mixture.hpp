#pragma once

#include <cmath>
#include <limits>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "cuqgnn/uqcore/dirichlet.hpp"
#include "cuqgnn/uqcore/monte_carlo.hpp"

namespace cuq {

/// Linear opinion pool: sum_j w_j Dir(alpha_j).
class DirichletMixture {
public:
    DirichletMixture() = default;

    DirichletMixture(std::vector<DirichletBelief> components, std::vector<double> weights)
        : components_(std::move(components)), weights_(std::move(weights)) {
        if (components_.empty() || components_.size() != weights_.size()) {
            throw DimensionError("mixture needs one weight per component and at least one component");
        }
        const std::size_t k = components_.front().n_classes();
        double total = 0.0;
        for (std::size_t j = 0; j < weights_.size(); ++j) {
            if (components_[j].n_classes() != k) throw DimensionError("mixture components differ in class count");
            if (!(weights_[j] >= 0.0)) throw DomainError("mixture weights must be nonnegative");
            total += weights_[j];
            log_beta_.push_back(special::log_beta(components_[j].alpha()));
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw DomainError("mixture weights sum to " + std::to_string(total) + ", expected 1");
        }
    }

    static DirichletMixture single(DirichletBelief q) { return DirichletMixture({std::move(q)}, {1.0}); }

    std::size_t size() const noexcept { return components_.size(); }
    std::size_t n_classes() const noexcept { return components_.front().n_classes(); }
    const std::vector<DirichletBelief>& components() const noexcept { return components_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    std::vector<double> mean() const {
        std::vector<double> m(n_classes(), 0.0);
        for (std::size_t j = 0; j < size(); ++j) {
            const auto mj = mean_theta(components_[j]);
            for (std::size_t k = 0; k < m.size(); ++k) m[k] += weights_[j] * mj[k];
        }
        return m;
    }

    double log_density(std::span<const double> theta) const {
        if (theta.size() != n_classes()) throw DimensionError("mixture log_density: theta length mismatch");
        std::vector<double> log_theta(theta.size());
        for (std::size_t k = 0; k < theta.size(); ++k) {
            if (!(theta[k] > 0.0)) throw DomainError("theta must lie in the simplex interior");
            log_theta[k] = std::log(theta[k]);
        }
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(size());
        for (std::size_t j = 0; j < size(); ++j) {
            if (!(weights_[j] > 0.0)) {
                terms[j] = -std::numeric_limits<double>::infinity();
                continue;
            }
            double t = std::log(weights_[j]) - log_beta_[j];
            const auto a = components_[j].alpha();
            for (std::size_t k = 0; k < a.size(); ++k) t += (a[k] - 1.0) * log_theta[k];
            terms[j] = t;
            best = std::max(best, t);
        }
        double s = 0.0;
        for (double t : terms) s += std::exp(t - best);
        return best + std::log(s);
    }

    std::discrete_distribution<std::size_t> component_picker() const {
        return std::discrete_distribution<std::size_t>(weights_.begin(), weights_.end());
    }

private:
    std::vector<DirichletBelief> components_;
    std::vector<double> weights_;
    std::vector<double> log_beta_;
};

struct MixtureMeasures {
    double tu = 0.0;
    double au = 0.0;
    double eu = 0.0;
    McEstimate eu_so;
};

/// TU and AU are exact (linearity of the mean and of the AU integral);
/// the differential entropy has no closed form and is estimated by sampling.
inline MixtureMeasures mixture_measures(const DirichletMixture& m, std::size_t n_mc, std::uint64_t seed = 0) {
    MixtureMeasures out;
    if (m.size() == 1) {
        const DirichletBelief& q = m.components().front();
        out.tu = total_uncertainty(q);
        out.au = aleatoric_uncertainty(q);
        out.eu = epistemic_uncertainty(q);
        out.eu_so = {second_order_eu(q), 0.0};
        return out;
    }
    out.tu = shannon_entropy(m.mean());
    for (std::size_t j = 0; j < m.size(); ++j) out.au += m.weights()[j] * aleatoric_uncertainty(m.components()[j]);
    out.eu = std::max(0.0, out.tu - out.au);

    std::mt19937_64 rng(seed);
    auto pick = m.component_picker();
    std::vector<double> theta;
    RunningMean acc;
    for (std::size_t s = 0; s < n_mc; ++s) {
        sample_dirichlet(m.components()[pick(rng)].alpha(), rng, theta);
        clamp_to_interior(theta);
        acc.add(-m.log_density(theta));
    }
    out.eu_so = acc.estimate();
    return out;
}

inline double measure(const DirichletMixture& m, Measure which, std::size_t n_mc = 10000, std::uint64_t seed = 0) {
    if (m.size() == 1) return measure(m.components().front(), which);
    switch (which) {
        case Measure::TU: return shannon_entropy(m.mean());
        case Measure::EU_PC: {
            // alpha0 of the pooled opinion is the weighted pseudo-count total
            double a0 = 0.0;
            for (std::size_t j = 0; j < m.size(); ++j) a0 += m.weights()[j] * m.components()[j].alpha0();
            return -a0;
        }
        default: break;
    }
    const MixtureMeasures mm = mixture_measures(m, which == Measure::EU_SO ? n_mc : 0, seed);
    switch (which) {
        case Measure::AU: return mm.au;
        case Measure::EU: return mm.eu;
        case Measure::EU_SO: return mm.eu_so.mean;
        default: return 0.0;
    }
}

/// Sampling estimate of a measure over the mixture, from the integral definitions.
inline McEstimate mc_oracle(const DirichletMixture& m, Measure which, std::size_t n_samples, std::uint64_t seed) {
    switch (which) {
        case Measure::TU: return {shannon_entropy(m.mean()), 0.0};
        case Measure::EU_PC: return {measure(m, Measure::EU_PC), 0.0};
        case Measure::EU: {
            const McEstimate au = mc_oracle(m, Measure::AU, n_samples, seed);
            return {shannon_entropy(m.mean()) - au.mean, au.se};
        }
        default: break;
    }
    std::mt19937_64 rng(seed);
    auto pick = m.component_picker();
    std::vector<double> theta;
    RunningMean acc;
    for (std::size_t s = 0; s < n_samples; ++s) {
        sample_dirichlet(m.components()[pick(rng)].alpha(), rng, theta);
        clamp_to_interior(theta);
        acc.add(which == Measure::AU ? shannon_entropy(theta) : -m.log_density(theta));
    }
    return acc.estimate();
}

}  // namespace cuq
