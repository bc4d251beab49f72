#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "cuqgnn/error.hpp"

// Gamma-family special functions on the positive reals.
//
// All three use the same scheme: shift the argument upward with the
// recurrence until it exceeds kAsymptoticThreshold, then evaluate the
// asymptotic (Stirling / Bernoulli) series. Absolute accuracy is about
// 1e-14 on [1e-3, 1e6].

namespace cuq::special {

namespace detail {

inline constexpr double kAsymptoticThreshold = 10.0;

inline void require_positive(double x, const char* fn) {
    if (!(x > 0.0)) {
        throw DomainError(std::string(fn) + " requires x > 0, got " + std::to_string(x));
    }
}

// Positive integers below this bound take the exact harmonic-number route
// for digamma, so psi(n+1) - psi(n) == 1/n holds to the last bit for small n.
inline constexpr int kExactDigammaIntegers = 64;

}  // namespace detail

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

inline double lgamma(double x) {
    detail::require_positive(x, "lgamma");
    if (x == 1.0 || x == 2.0) return 0.0;

    double prod = 1.0;
    while (x < detail::kAsymptoticThreshold) {
        prod *= x;
        x += 1.0;
    }
    const double shift = std::log(prod);

    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Stirling series with Bernoulli coefficients B_2n / (2n (2n-1)).
    const double series =
        inv * (1.0 / 12.0 +
               inv2 * (-1.0 / 360.0 +
                       inv2 * (1.0 / 1260.0 +
                               inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360360.0))))));
    const double half_log_two_pi = 0.91893853320467274178032973640561764;
    return (x - 0.5) * std::log(x) - x + half_log_two_pi + series - shift;
}

inline double digamma(double x) {
    detail::require_positive(x, "digamma");

    if (x <= detail::kExactDigammaIntegers && x == std::floor(x)) {
        double h = 0.0;
        const int n = static_cast<int>(x);
        for (int k = 1; k < n; ++k) h += 1.0 / k;
        return h - kEulerGamma;
    }

    double acc = 0.0;
    while (x < detail::kAsymptoticThreshold) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

/// First derivative of digamma.
inline double trigamma(double x) {
    detail::require_positive(x, "trigamma");
    double acc = 0.0;
    while (x < detail::kAsymptoticThreshold) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv + 0.5 * inv2 +
        inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0)))));
    return acc + series;
}

/// log of the multivariate Beta function, sum lgamma(a_k) - lgamma(sum a_k).
template <class Range>
double log_beta(const Range& alpha) {
    double s = 0.0;
    double total = 0.0;
    for (double a : alpha) {
        s += lgamma(a);
        total += a;
    }
    return s - lgamma(total);
}

}  // namespace cuq::special
