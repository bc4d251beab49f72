#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cuqgnn/diffnum/tensor.hpp"
#include "cuqgnn/error.hpp"

namespace cuq {

inline constexpr int kUnlabeled = -1;

/// Undirected graph with symmetric CSR adjacency, dense node features and
/// optional integer labels. Immutable after construction.
class Graph {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    Graph() = default;

    /// Symmetrizes and deduplicates `edges` and drops self-loops.
    /// `labels` may be empty (all unlabeled) or hold one entry per node, kUnlabeled allowed.
    static Graph from_edges(std::size_t n_nodes, const std::vector<Edge>& edges, Tensor features,
                            std::vector<int> labels, int n_classes) {
        if (features.rows() != n_nodes) {
            throw DimensionError("feature rows " + std::to_string(features.rows()) + " != node count " +
                                 std::to_string(n_nodes));
        }
        if (labels.empty()) labels.assign(n_nodes, kUnlabeled);
        if (labels.size() != n_nodes) throw DimensionError("label count does not match node count");
        for (std::size_t i = 0; i < n_nodes; ++i) {
            if (labels[i] != kUnlabeled && (labels[i] < 0 || labels[i] >= n_classes)) {
                throw ParameterError("label " + std::to_string(labels[i]) + " of node " + std::to_string(i) +
                                     " outside [0, " + std::to_string(n_classes) + ")");
            }
        }

        std::vector<Edge> directed;
        directed.reserve(edges.size() * 2);
        for (auto [u, v] : edges) {
            if (u >= n_nodes || v >= n_nodes) {
                throw DimensionError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
            }
            if (u == v) continue;
            directed.emplace_back(u, v);
            directed.emplace_back(v, u);
        }
        std::sort(directed.begin(), directed.end());
        directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

        Graph g;
        g.n_classes_ = n_classes;
        g.features_ = std::move(features);
        g.labels_ = std::move(labels);
        g.offsets_.assign(n_nodes + 1, 0);
        g.neighbors_.reserve(directed.size());
        for (auto [u, v] : directed) {
            g.offsets_[u + 1]++;
            g.neighbors_.push_back(v);
        }
        for (std::size_t i = 0; i < n_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
        return g;
    }

    std::size_t n_nodes() const noexcept { return offsets_.size() - 1; }
    std::size_t n_features() const noexcept { return features_.cols(); }
    int n_classes() const noexcept { return n_classes_; }

    /// Number of stored directed adjacency entries (twice the undirected edge count).
    std::size_t n_stored_edges() const noexcept { return neighbors_.size(); }
    std::size_t n_edges() const noexcept { return neighbors_.size() / 2; }

    std::size_t degree(std::size_t i) const noexcept { return offsets_[i + 1] - offsets_[i]; }
    std::span<const std::size_t> neighbors(std::size_t i) const noexcept {
        return {neighbors_.data() + offsets_[i], degree(i)};
    }
    bool has_edge(std::size_t u, std::size_t v) const {
        const auto nb = neighbors(u);
        return std::binary_search(nb.begin(), nb.end(), v);
    }

    const Tensor& features() const noexcept { return features_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    int label(std::size_t i) const noexcept { return labels_[i]; }

    /// Undirected edge list with u < v.
    std::vector<Edge> edge_list() const {
        std::vector<Edge> out;
        out.reserve(n_edges());
        for (std::size_t u = 0; u < n_nodes(); ++u)
            for (std::size_t v : neighbors(u))
                if (u < v) out.emplace_back(u, v);
        return out;
    }

    Graph with_features(Tensor features) const {
        if (features.rows() != n_nodes()) throw DimensionError("with_features: row count mismatch");
        Graph g = *this;
        g.features_ = std::move(features);
        return g;
    }

    Graph with_labels(std::vector<int> labels, int n_classes) const {
        return from_edges(n_nodes(), edge_list(), features_, std::move(labels), n_classes);
    }

    /// Relabels nodes: node i of this graph becomes node perm[i] of the result.
    Graph permuted(const std::vector<std::size_t>& perm) const {
        const std::size_t n = n_nodes();
        if (perm.size() != n) throw DimensionError("permutation size mismatch");
        std::vector<Edge> edges;
        for (auto [u, v] : edge_list()) edges.emplace_back(perm[u], perm[v]);
        Tensor feats(n, n_features());
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(features_.row(i).begin(), features_.row(i).end(), feats.row(perm[i]).begin());
            labels[perm[i]] = labels_[i];
        }
        return from_edges(n, edges, std::move(feats), std::move(labels), n_classes_);
    }

    /// Fraction of edges whose endpoints carry the same label (labeled endpoints only).
    double edge_homophily() const {
        std::size_t same = 0, total = 0;
        for (auto [u, v] : edge_list()) {
            if (labels_[u] == kUnlabeled || labels_[v] == kUnlabeled) continue;
            ++total;
            same += labels_[u] == labels_[v] ? 1 : 0;
        }
        return total == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(total);
    }

    bool is_symmetric() const {
        for (std::size_t u = 0; u < n_nodes(); ++u)
            for (std::size_t v : neighbors(u))
                if (!has_edge(v, u)) return false;
        return true;
    }

private:
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> neighbors_;
    Tensor features_;
    std::vector<int> labels_;
    int n_classes_ = 0;
};

/// Zero-mean, unit-variance columns (population statistics). Constant columns are only centered.
inline Tensor standardize_columns(const Tensor& x) {
    Tensor out = x;
    const double n = static_cast<double>(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
        var /= n;
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = (x(i, j) - mean) / sd;
    }
    return out;
}

}  // namespace cuq
