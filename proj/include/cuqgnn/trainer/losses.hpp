#pragma once

#include <span>
#include <vector>

#include "cuqgnn/graphcore/propagation.hpp"

namespace cuq {

namespace detail {

inline std::vector<std::size_t> class_columns(std::span<const std::size_t> nodes, std::span<const int> labels) {
    std::vector<std::size_t> out;
    out.reserve(nodes.size());
    for (std::size_t i : nodes) {
        if (labels[i] < 0) throw ParameterError("loss evaluated on an unlabeled node");
        out.push_back(static_cast<std::size_t>(labels[i]));
    }
    return out;
}

}  // namespace detail

/// Expected cross-entropy under Dir(alpha_i) for every row: psi(alpha0) - psi(alpha_y). Returns m x 1.
inline Var uce_per_node(const Var& alpha, std::span<const std::size_t> nodes, std::span<const int> labels) {
    using namespace ad;
    Var a = gather_rows(alpha, {nodes.begin(), nodes.end()});
    return digamma(row_sum(a)) - pick_columns(digamma(a), cuq::detail::class_columns(nodes, labels));
}

/// Mean UCE over `nodes`.
inline Var uce_loss(const Var& alpha, std::span<const std::size_t> nodes, std::span<const int> labels) {
    return ad::mean(uce_per_node(alpha, nodes, labels));
}

/// Differential entropy of Dir(alpha) for each row (N x 1):
/// log B(alpha) + (alpha0 - K) psi(alpha0) - sum_k (alpha_k - 1) psi(alpha_k).
inline Var dirichlet_entropy(const Var& alpha) {
    using namespace ad;
    const double k = static_cast<double>(alpha.cols());
    Var a0 = row_sum(alpha);
    Var log_b = row_sum(lgamma(alpha)) - lgamma(a0);
    return log_b + add_scalar(a0, -k) * digamma(a0) - row_sum(add_scalar(alpha, -1.0) * digamma(alpha));
}

/// Negative mean entropy over `nodes`; the objective is UCE + weight * this.
inline Var entropy_regularizer(const Var& alpha, std::span<const std::size_t> nodes) {
    return ad::scale(ad::mean(ad::gather_rows(dirichlet_entropy(alpha), {nodes.begin(), nodes.end()})), -1.0);
}

/// Expected UCE under each node's mixture sum_j Pi_ij Dir(alpha_j): the
/// per-component UCE matrix is dispersed like any node signal. Returns m x 1.
inline Var mixture_uce_per_node(const Var& alpha_ft, const SparseMatrix& rw, double eps, std::size_t steps,
                                std::span<const std::size_t> nodes, std::span<const int> labels) {
    using namespace ad;
    Var u = digamma(row_sum(alpha_ft)) - digamma(alpha_ft);  // N x K
    Var pooled = ad::ppr_propagate(rw, u, eps, steps);
    return pick_columns(gather_rows(pooled, {nodes.begin(), nodes.end()}), cuq::detail::class_columns(nodes, labels));
}

/// Negative mean of the dispersed component entropies sum_j Pi_ij H(Dir(alpha_j)).
inline Var mixture_entropy_regularizer(const Var& alpha_ft, const SparseMatrix& rw, double eps, std::size_t steps,
                                       std::span<const std::size_t> nodes) {
    Var h = ad::ppr_propagate(rw, dirichlet_entropy(alpha_ft), eps, steps);
    return ad::scale(ad::mean(ad::gather_rows(h, {nodes.begin(), nodes.end()})), -1.0);
}

/// -log p_y per node from row log-probabilities. Returns m x 1.
inline Var cross_entropy_per_node(const Var& log_probs, std::span<const std::size_t> nodes,
                                  std::span<const int> labels) {
    return ad::scale(ad::pick_columns(ad::gather_rows(log_probs, {nodes.begin(), nodes.end()}),
                                      detail::class_columns(nodes, labels)),
                     -1.0);
}

}  // namespace cuq
