#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "cuqgnn/error.hpp"

namespace cuq {

/// Rejection fractions 0.00, 0.01, ..., 0.99.
inline std::vector<double> arc_grid() {
    std::vector<double> g(100);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i) / 100.0;
    return g;
}

struct ArcCurve {
    std::vector<double> p;
    std::vector<double> accuracy;
    std::vector<std::size_t> retained;
    /// Set when some grid point would retain nothing; the curve stops before it.
    bool truncated = false;
};

/// At rejection fraction p, drops the floor(p n) most uncertain instances and
/// reports accuracy on the rest. Equal uncertainties reject the lower index first.
inline ArcCurve arc_curve(std::span<const double> uncertainty, const std::vector<bool>& correct,
                          std::span<const double> grid) {
    if (uncertainty.size() != correct.size()) throw DimensionError("arc_curve: uncertainty and correctness differ in length");
    const std::size_t n = uncertainty.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return uncertainty[a] > uncertainty[b]; });
    // hits_kept[r] = correct instances among order[r..n).
    std::vector<std::size_t> hits_kept(n + 1, 0);
    for (std::size_t r = n; r-- > 0;) hits_kept[r] = hits_kept[r + 1] + (correct[order[r]] ? 1 : 0);

    ArcCurve out;
    for (double p : grid) {
        if (!(p >= 0.0 && p < 1.0)) throw ParameterError("arc_curve: grid points must lie in [0, 1)");
        const auto rejected = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 1e-9));
        if (rejected >= n) {
            out.truncated = true;
            break;
        }
        out.p.push_back(p);
        out.retained.push_back(n - rejected);
        out.accuracy.push_back(static_cast<double>(hits_kept[rejected]) / static_cast<double>(n - rejected));
    }
    return out;
}

/// Mann-Whitney AUROC with midranks: P(ood > id) + 0.5 P(ood == id).
inline double auroc(std::span<const double> scores_ood, std::span<const double> scores_id) {
    if (scores_ood.empty() || scores_id.empty()) throw ParameterError("auroc: both score sets must be non-empty");
    struct Item {
        double score;
        bool ood;
    };
    std::vector<Item> all;
    all.reserve(scores_ood.size() + scores_id.size());
    for (double s : scores_ood) all.push_back({s, true});
    for (double s : scores_id) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t)
            if (all[t].ood) rank_sum += midrank;
        i = j;
    }
    const double n1 = static_cast<double>(scores_ood.size()), n0 = static_cast<double>(scores_id.size());
    return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Sample mean and standard error (sample standard deviation over sqrt(n); 0 for n = 1).
inline MeanSe mean_se(std::span<const double> xs) {
    if (xs.empty()) throw ParameterError("mean_se: empty sample");
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace cuq
