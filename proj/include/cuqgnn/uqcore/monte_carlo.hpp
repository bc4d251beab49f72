#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "cuqgnn/uqcore/dirichlet.hpp"

// Sampling-based estimates of Dirichlet expectations. These are test oracles
// for the closed forms, plus the estimator for mixture differential entropy.

namespace cuq {

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean
};

/// Welford accumulator.
class RunningMean {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const noexcept { return n_; }
    McEstimate estimate() const {
        if (n_ < 2) return {mean_, 0.0};
        const double var = m2_ / static_cast<double>(n_ - 1);
        return {mean_, std::sqrt(var / static_cast<double>(n_))};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// theta ~ Dir(alpha) by normalizing independent Gamma(alpha_k, 1) draws.
inline void sample_dirichlet(std::span<const double> alpha, std::mt19937_64& rng, std::vector<double>& theta) {
    theta.resize(alpha.size());
    double total = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        std::gamma_distribution<double> gamma(alpha[k], 1.0);
        total += theta[k] = gamma(rng);
    }
    for (double& t : theta) t /= total;
}

/// Pushes underflowed coordinates to the smallest normal double so log-densities stay finite.
inline void clamp_to_interior(std::vector<double>& theta) {
    for (double& t : theta)
        if (t < std::numeric_limits<double>::min()) t = std::numeric_limits<double>::min();
}

/// E_{Dir(alpha)}[f(Theta)] with its standard error.
template <class F>
McEstimate mc_expectation(const DirichletBelief& q, F&& f, std::size_t n_samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::gamma_distribution<double>> gammas;
    for (double a : q.alpha()) gammas.emplace_back(a, 1.0);
    std::vector<double> theta(gammas.size());
    RunningMean acc;
    for (std::size_t s = 0; s < n_samples; ++s) {
        double total = 0.0;
        for (std::size_t k = 0; k < gammas.size(); ++k) total += theta[k] = gammas[k](rng);
        for (double& t : theta) t /= total;
        clamp_to_interior(theta);
        acc.add(f(std::span<const double>(theta)));
    }
    return acc.estimate();
}

/// Sampling estimate of an uncertainty measure, straight from its integral definition.
/// TU needs only the mean, so it is returned exactly with zero error; EU_PC is
/// a deterministic function of alpha and is returned the same way.
inline McEstimate mc_oracle(const DirichletBelief& q, Measure m, std::size_t n_samples, std::uint64_t seed) {
    switch (m) {
        case Measure::TU: return {total_uncertainty(q), 0.0};
        case Measure::EU_PC: return {pseudo_count_eu(q), 0.0};
        case Measure::AU:
            return mc_expectation(q, [](std::span<const double> th) { return shannon_entropy(th); }, n_samples, seed);
        case Measure::EU: {
            const McEstimate au = mc_oracle(q, Measure::AU, n_samples, seed);
            return {total_uncertainty(q) - au.mean, au.se};
        }
        case Measure::EU_SO:
        {
            const double log_b = special::log_beta(q.alpha());
            return mc_expectation(
                q,
                [&q, log_b](std::span<const double> th) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < th.size(); ++k) s += (q.alpha(k) - 1.0) * std::log(th[k]);
                    return log_b - s;
                },
                n_samples, seed);
        }
    }
    return {};
}

struct EntropyEstimates {
    McEstimate au;     // E[H(Theta)]
    McEstimate eu_so;  // E[-log Dir(Theta; alpha)]
};

/// AU and EU_SO from one shared set of draws.
inline EntropyEstimates mc_entropies(const DirichletBelief& q, std::size_t n_samples, std::uint64_t seed) {
    const double log_b = special::log_beta(q.alpha());
    RunningMean au;
    const McEstimate so = mc_expectation(
        q,
        [&](std::span<const double> th) {
            double h = 0.0, s = 0.0;
            for (std::size_t k = 0; k < th.size(); ++k) {
                const double lt = std::log(th[k]);
                h -= th[k] * lt;
                s += (q.alpha(k) - 1.0) * lt;
            }
            au.add(h);
            return log_b - s;
        },
        n_samples, seed);
    return {au.estimate(), so};
}

/// Expected cross-entropy E[-log Theta_y] under Dir(alpha), sampled through the
/// Beta(alpha_y, alpha0 - alpha_y) marginal of Theta_y.
inline McEstimate mc_uce(const DirichletBelief& q, std::size_t label, std::size_t n_samples, std::uint64_t seed) {
    if (label >= q.n_classes()) throw DimensionError("mc_uce: label out of range");
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> own(q.alpha(label), 1.0), rest(q.alpha0() - q.alpha(label), 1.0);
    RunningMean acc;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double a = own(rng), b = rest(rng);
        acc.add(std::log1p(b / a));  // -log(a / (a + b))
    }
    return acc.estimate();
}

}  // namespace cuq
