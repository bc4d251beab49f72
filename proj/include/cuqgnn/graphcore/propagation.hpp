#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cuqgnn/diffnum/tape.hpp"
#include "cuqgnn/graphcore/graph.hpp"
#include "cuqgnn/graphcore/sparse.hpp"

namespace cuq {

/// Random-walk normalized adjacency A D^-1; every column sums to one.
/// An isolated node gets a unit self-weight in its own column. If
/// `isolated` is non-null it receives the number of such nodes.
inline SparseMatrix rw_normalize(const Graph& g, std::size_t* isolated = nullptr) {
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(g.n_stored_edges() + 8);
    std::size_t lonely = 0;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        if (g.degree(i) == 0) {
            ++lonely;
            entries.push_back({i, i, 1.0});
            continue;
        }
        // (A D^-1)_{j,i} = A_{j,i} / d_i
        const double w = 1.0 / static_cast<double>(g.degree(i));
        for (std::size_t j : g.neighbors(i)) entries.push_back({j, i, w});
    }
    if (isolated) *isolated = lonely;
    return SparseMatrix::from_entries(g.n_nodes(), g.n_nodes(), std::move(entries));
}

/// D~^-1/2 (A + I) D~^-1/2 with D~ the degree matrix of A + I.
inline SparseMatrix sym_normalize(const Graph& g) {
    const std::size_t n = g.n_nodes();
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(g.n_stored_edges() + n);
    for (std::size_t i = 0; i < n; ++i) {
        entries.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});
        for (std::size_t j : g.neighbors(i)) entries.push_back({i, j, inv_sqrt[i] * inv_sqrt[j]});
    }
    return SparseMatrix::from_entries(n, n, std::move(entries));
}

namespace detail {

inline void check_teleport(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw ParameterError("teleport probability must lie in (0, 1], got " + std::to_string(eps));
    }
}

// L applications of (eps I + (1 - eps) M^T), or of (eps I + (1 - eps) M) when `forward_orientation`.
inline Tensor power_apply(const SparseMatrix& m, Tensor h, double eps, std::size_t steps, bool forward_orientation) {
    if (eps == 1.0) return h;
    for (std::size_t t = 0; t < steps; ++t) {
        Tensor walked = forward_orientation ? m.multiply(h) : m.multiply_transposed(h);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = eps * h[i] + (1.0 - eps) * walked[i];
    }
    return h;
}

}  // namespace detail

/// Personalized-PageRank dispersion Pi * h with Pi = (eps I + (1 - eps) A^T)^L,
/// applied as L sparse steps (no N x N matrix is formed).
///
/// `rw_adjacency` is the column-stochastic A D^-1 from rw_normalize; stepping
/// with its transpose D^-1 A makes Pi row-stochastic, so each output row is a
/// convex combination of input rows.
inline Tensor ppr_propagate(const SparseMatrix& rw_adjacency, const Tensor& h, double eps, std::size_t steps) {
    detail::check_teleport(eps);
    if (h.rows() != rw_adjacency.rows()) {
        throw DimensionError("ppr_propagate: " + h.shape_string() + " does not match adjacency size " +
                             std::to_string(rw_adjacency.rows()));
    }
    return detail::power_apply(rw_adjacency, h, eps, steps, false);
}

/// Row `node` of the dispersion matrix Pi used by ppr_propagate.
inline std::vector<double> ppr_weights_row(const SparseMatrix& rw_adjacency, std::size_t node, double eps,
                                           std::size_t steps) {
    detail::check_teleport(eps);
    Tensor e(rw_adjacency.rows(), 1);
    e(node, 0) = 1.0;
    // e^T Pi = ((eps I + (1 - eps) A) ^ L e)^T
    Tensor r = detail::power_apply(rw_adjacency, std::move(e), eps, steps, true);
    return r.values();
}

namespace ad {

/// Differentiable ppr_propagate.
inline Var ppr_propagate(const SparseMatrix& rw_adjacency, const Var& h, double eps, std::size_t steps) {
    Tensor out = cuq::ppr_propagate(rw_adjacency, h.value(), eps, steps);
    return h.tape().record(std::move(out), {h}, [&rw_adjacency, h, eps, steps](Tape& t, const Tensor& g) {
        t.accumulate(h, cuq::detail::power_apply(rw_adjacency, g, eps, steps, true));
    });
}

/// Differentiable M * h for a constant sparse M.
inline Var spmm(const SparseMatrix& m, const Var& h) {
    return h.tape().record(m.multiply(h.value()), {h},
                           [&m, h](Tape& t, const Tensor& g) { t.accumulate(h, m.multiply_transposed(g)); });
}

}  // namespace ad
}  // namespace cuq
