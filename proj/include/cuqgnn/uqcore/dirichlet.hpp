#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cuqgnn/diffnum/special.hpp"
#include "cuqgnn/error.hpp"

namespace cuq {

/// Second-order opinion Dir(alpha) with pseudo-counts alpha_k >= 1.
class DirichletBelief {
public:
    DirichletBelief() = default;

    explicit DirichletBelief(std::vector<double> alpha) : alpha_(std::move(alpha)) {
        if (alpha_.size() < 2) throw DomainError("a Dirichlet belief needs at least two classes");
        for (double a : alpha_) {
            if (!std::isfinite(a) || a < 1.0) {
                throw DomainError("pseudo-counts must be finite and >= 1, got " + std::to_string(a));
            }
        }
        alpha0_ = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
    }

    std::size_t n_classes() const noexcept { return alpha_.size(); }
    std::span<const double> alpha() const noexcept { return alpha_; }
    double alpha(std::size_t k) const noexcept { return alpha_[k]; }
    double alpha0() const noexcept { return alpha0_; }

    friend bool operator==(const DirichletBelief&, const DirichletBelief&) = default;

private:
    std::vector<double> alpha_;
    double alpha0_ = 0.0;
};

/// Expected first-order distribution alpha / alpha0.
inline std::vector<double> mean_theta(const DirichletBelief& q) {
    std::vector<double> out(q.n_classes());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = q.alpha(k) / q.alpha0();
    return out;
}

/// Shannon entropy in nats, with 0 log 0 = 0.
inline double shannon_entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

/// Entropy of the expected distribution.
inline double total_uncertainty(const DirichletBelief& q) { return shannon_entropy(mean_theta(q)); }

/// Expected entropy of Theta ~ Dir(alpha), closed form
/// -sum_k (alpha_k / alpha0) (psi(alpha_k + 1) - psi(alpha0 + 1)).
inline double aleatoric_uncertainty(const DirichletBelief& q) {
    const double psi0 = special::digamma(q.alpha0() + 1.0);
    double au = 0.0;
    for (double a : q.alpha()) au -= (a / q.alpha0()) * (special::digamma(a + 1.0) - psi0);
    return au;
}

/// Mutual information TU - AU; clipped at zero against rounding.
inline double epistemic_uncertainty(const DirichletBelief& q) {
    return std::max(0.0, total_uncertainty(q) - aleatoric_uncertainty(q));
}

/// Differential entropy of Dir(alpha); may be negative.
inline double second_order_eu(const DirichletBelief& q) {
    const double k = static_cast<double>(q.n_classes());
    double h = special::log_beta(q.alpha()) + (q.alpha0() - k) * special::digamma(q.alpha0());
    for (double a : q.alpha()) h -= (a - 1.0) * special::digamma(a);
    return h;
}

inline double least_confidence(const DirichletBelief& q) {
    const auto a = q.alpha();
    return 1.0 - *std::max_element(a.begin(), a.end()) / q.alpha0();
}

inline double pseudo_count_eu(const DirichletBelief& q) { return -q.alpha0(); }

/// Predicted class: argmax of the mean, lowest index on ties.
inline std::size_t predicted_class(std::span<const double> mean) {
    return static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

/// log Dir(theta | alpha) for theta in the open simplex. Accepts any positive alpha.
inline double dirichlet_log_density(std::span<const double> alpha, std::span<const double> theta) {
    if (alpha.size() != theta.size()) throw DimensionError("alpha/theta length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (!(theta[k] > 0.0)) throw DomainError("theta must lie in the simplex interior");
        if (alpha[k] != 1.0) s += (alpha[k] - 1.0) * std::log(theta[k]);
    }
    return s - special::log_beta(alpha);
}

/// KL(Dir(a) || Dir(b)) for positive parameter vectors.
inline double dirichlet_kl(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dirichlet_kl length mismatch");
    const double a0 = std::accumulate(a.begin(), a.end(), 0.0);
    const double psi_a0 = special::digamma(a0);
    double kl = special::log_beta(b) - special::log_beta(a);
    for (std::size_t k = 0; k < a.size(); ++k) kl += (a[k] - b[k]) * (special::digamma(a[k]) - psi_a0);
    return kl;
}

/// Uncertainty measures reported by the evaluation protocols.
enum class Measure { TU, AU, EU, EU_PC, EU_SO };

inline constexpr Measure kAllMeasures[] = {Measure::TU, Measure::AU, Measure::EU, Measure::EU_PC, Measure::EU_SO};

inline const char* measure_name(Measure m) {
    switch (m) {
        case Measure::TU: return "tu";
        case Measure::AU: return "au";
        case Measure::EU: return "eu";
        case Measure::EU_PC: return "eu_pc";
        case Measure::EU_SO: return "eu_so";
    }
    return "?";
}

inline Measure parse_measure(const std::string& s) {
    for (Measure m : kAllMeasures)
        if (s == measure_name(m)) return m;
    throw ParameterError("unknown uncertainty measure '" + s + "'");
}

inline double measure(const DirichletBelief& q, Measure m) {
    switch (m) {
        case Measure::TU: return total_uncertainty(q);
        case Measure::AU: return aleatoric_uncertainty(q);
        case Measure::EU: return epistemic_uncertainty(q);
        case Measure::EU_PC: return pseudo_count_eu(q);
        case Measure::EU_SO: return second_order_eu(q);
    }
    return 0.0;
}

}  // namespace cuq
