#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cuqgnn/graphcore/graph.hpp"

namespace cuq {

struct SplitSpec {
    double train = 0.05;
    double val = 0.15;
    double test = 0.80;
    bool stratified = true;
    std::uint64_t seed = 0;
    std::size_t n_repeats = 1;

    void validate() const {
        if (train <= 0.0 || val < 0.0 || test < 0.0) throw SplitError("split fractions must be >= 0 (train > 0)");
        if (std::abs(train + val + test - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");
        if (n_repeats == 0) throw SplitError("n_repeats must be >= 1");
    }
};

/// Node index sets, each sorted ascending.
struct Split {
    std::vector<std::size_t> train, val, test;

    friend bool operator==(const Split&, const Split&) = default;
};

namespace detail {

inline void split_group(std::vector<std::size_t> nodes, const SplitSpec& s, std::mt19937_64& rng, Split& out) {
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const double n = static_cast<double>(nodes.size());
    const auto n_train = std::min<std::size_t>(nodes.size(), static_cast<std::size_t>(std::lround(s.train * n)));
    const auto n_val =
        std::min<std::size_t>(nodes.size() - n_train, static_cast<std::size_t>(std::lround(s.val * n)));
    out.train.insert(out.train.end(), nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.insert(out.val.end(), nodes.begin() + static_cast<std::ptrdiff_t>(n_train),
                   nodes.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.insert(out.test.end(), nodes.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), nodes.end());
}

}  // namespace detail

/// Random train/val/test partitions of the labeled nodes; repeat r uses seed + r.
/// Stratified splits round each class's share separately.
inline std::vector<Split> make_splits(const Graph& g, const SplitSpec& s) {
    s.validate();
    const int k = g.n_classes();
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(std::max(k, 0)));
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        if (g.label(i) == kUnlabeled) continue;
        by_class[static_cast<std::size_t>(g.label(i))].push_back(i);
        labeled.push_back(i);
    }
    std::vector<Split> out;
    for (std::size_t r = 0; r < s.n_repeats; ++r) {
        std::mt19937_64 rng(s.seed + r);
        Split split;
        if (s.stratified) {
            for (const auto& nodes : by_class) detail::split_group(nodes, s, rng, split);
        } else {
            detail::split_group(labeled, s, rng, split);
        }
        std::vector<std::size_t> per_class(by_class.size(), 0);
        for (std::size_t i : split.train) ++per_class[static_cast<std::size_t>(g.label(i))];
        for (std::size_t c = 0; c < per_class.size(); ++c) {
            if (per_class[c] == 0) {
                throw SplitError("class " + std::to_string(c) + " (" + std::to_string(by_class[c].size()) +
                                 " labeled nodes) gets no training node");
            }
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.val.begin(), split.val.end());
        std::sort(split.test.begin(), split.test.end());
        out.push_back(std::move(split));
    }
    return out;
}

}  // namespace cuq
