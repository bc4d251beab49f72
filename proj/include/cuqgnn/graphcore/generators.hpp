#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cuqgnn/graphcore/graph.hpp"

namespace cuq {

struct SbmParams {
    std::size_t n = 200;
    int k_classes = 4;
    double p_in = 0.1;
    double p_out = 0.01;
    std::size_t feature_dim = 16;
    double class_sep = 2.0;
    std::uint64_t seed = 0;
};

struct BarabasiAlbertParams {
    std::size_t n = 1000;
    std::size_t m_attach = 2;
    std::size_t feature_dim = 16;
    int k_classes = 4;
    double class_sep = 2.0;
    /// Probability that an attachment step is restricted to the new node's own class.
    double within_class_bias = 0.8;
    std::uint64_t seed = 0;
};

namespace detail {

// class_sep * u_c with u_c = e_c when the feature space has room, else seeded random unit vectors.
inline Tensor class_means(int k, std::size_t dim, double class_sep, std::mt19937_64& rng) {
    Tensor means(static_cast<std::size_t>(k), dim);
    if (dim >= static_cast<std::size_t>(k)) {
        for (int c = 0; c < k; ++c) means(c, c) = class_sep;
        return means;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int c = 0; c < k; ++c) {
        double norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) norm += (means(c, j) = normal(rng)) * means(c, j);
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < dim; ++j) means(c, j) *= class_sep / norm;
    }
    return means;
}

inline Tensor gaussian_class_features(const std::vector<int>& labels, const Tensor& means, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor x(labels.size(), means.cols());
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = 0; j < means.cols(); ++j) x(i, j) = means(labels[i], j) + normal(rng);
    return x;
}

}  // namespace detail

/// Stochastic block model with equal-size contiguous blocks and per-class
/// unit-variance Gaussian features.
inline Graph gen_sbm(const SbmParams& p) {
    auto valid_prob = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!valid_prob(p.p_in) || !valid_prob(p.p_out)) {
        throw ParameterError("SBM edge probabilities must lie in [0, 1]");
    }
    if (p.k_classes < 1 || p.n < static_cast<std::size_t>(p.k_classes) || p.feature_dim == 0) {
        throw ParameterError("SBM needs n >= k_classes >= 1 and feature_dim >= 1");
    }
    std::mt19937_64 rng(p.seed);
    std::vector<int> labels(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
        labels[i] = static_cast<int>(i * static_cast<std::size_t>(p.k_classes) / p.n);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Graph::Edge> edges;
    for (std::size_t u = 0; u < p.n; ++u) {
        for (std::size_t v = u + 1; v < p.n; ++v) {
            const double prob = labels[u] == labels[v] ? p.p_in : p.p_out;
            if (unif(rng) < prob) edges.emplace_back(u, v);
        }
    }
    const Tensor means = detail::class_means(p.k_classes, p.feature_dim, p.class_sep, rng);
    Tensor x = detail::gaussian_class_features(labels, means, rng);
    return Graph::from_edges(p.n, edges, std::move(x), std::move(labels), p.k_classes);
}

/// Preferential-attachment growth from an (m+1)-clique. Each new node draws a
/// class uniformly; with probability within_class_bias an attachment target is
/// drawn degree-proportionally from nodes of that class, otherwise from all nodes.
inline Graph gen_barabasi_albert(const BarabasiAlbertParams& p) {
    if (p.m_attach < 1 || p.n <= p.m_attach || p.k_classes < 1 || p.feature_dim == 0) {
        throw ParameterError("Barabasi-Albert needs m_attach >= 1, n > m_attach, k_classes >= 1");
    }
    if (p.within_class_bias < 0.0 || p.within_class_bias > 1.0) {
        throw ParameterError("within_class_bias must lie in [0, 1]");
    }
    std::mt19937_64 rng(p.seed);
    std::uniform_int_distribution<int> pick_class(0, p.k_classes - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<int> labels(p.n);
    std::vector<Graph::Edge> edges;
    // Each node appears once per incident edge: uniform draws are degree-proportional.
    std::vector<std::size_t> stubs;
    std::vector<std::vector<std::size_t>> class_stubs(static_cast<std::size_t>(p.k_classes));

    auto connect = [&](std::size_t u, std::size_t v) {
        edges.emplace_back(u, v);
        for (std::size_t w : {u, v}) {
            stubs.push_back(w);
            class_stubs[labels[w]].push_back(w);
        }
    };

    const std::size_t seed_nodes = p.m_attach + 1;
    for (std::size_t i = 0; i < seed_nodes; ++i) labels[i] = pick_class(rng);
    for (std::size_t i = 0; i < seed_nodes; ++i)
        for (std::size_t j = i + 1; j < seed_nodes; ++j) connect(i, j);

    std::vector<std::size_t> targets;
    for (std::size_t v = seed_nodes; v < p.n; ++v) {
        labels[v] = pick_class(rng);
        targets.clear();
        std::size_t guard = 0;
        while (targets.size() < p.m_attach) {
            const auto& own = class_stubs[labels[v]];
            const bool within = !own.empty() && unif(rng) < p.within_class_bias;
            const auto& pool = within ? own : stubs;
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            const std::size_t t = pool[pick(rng)];
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
            if (++guard > 1000 * p.m_attach) {
                // Fall back to the lowest-index unused nodes; only reachable in tiny graphs.
                for (std::size_t u = 0; u < v && targets.size() < p.m_attach; ++u)
                    if (std::find(targets.begin(), targets.end(), u) == targets.end()) targets.push_back(u);
            }
        }
        for (std::size_t t : targets) connect(v, t);
    }
    const Tensor means = detail::class_means(p.k_classes, p.feature_dim, p.class_sep, rng);
    Tensor x = detail::gaussian_class_features(labels, means, rng);
    return Graph::from_edges(p.n, edges, std::move(x), std::move(labels), p.k_classes);
}

}  // namespace cuq
