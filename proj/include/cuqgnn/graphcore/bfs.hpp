#pragma once

#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "cuqgnn/graphcore/graph.hpp"

namespace cuq {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Hop distances from `source`; unreachable nodes are kUnreachable.
inline std::vector<double> bfs_distances(const Graph& g, std::size_t source) {
    if (source >= g.n_nodes()) throw DimensionError("bfs source out of range");
    std::vector<double> dist(g.n_nodes(), kUnreachable);
    std::queue<std::size_t> frontier;
    dist[source] = 0.0;
    frontier.push(source);
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v : g.neighbors(u)) {
            if (dist[v] == kUnreachable) {
                dist[v] = dist[u] + 1.0;
                frontier.push(v);
            }
        }
    }
    return dist;
}

/// One distance vector per source, in the order given.
inline std::vector<std::vector<double>> bfs_distances(const Graph& g, const std::vector<std::size_t>& sources) {
    std::vector<std::vector<double>> out;
    out.reserve(sources.size());
    for (std::size_t s : sources) out.push_back(bfs_distances(g, s));
    return out;
}

}  // namespace cuq
