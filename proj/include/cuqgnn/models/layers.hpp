#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "cuqgnn/graphcore/graph.hpp"
#include "cuqgnn/graphcore/propagation.hpp"

namespace cuq {

/// Glorot-uniform fan_in x fan_out matrix.
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor w(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = u(rng);
    return w;
}

/// x W + b with b a 1 x out row.
inline Var linear(const Var& x, const Var& w, const Var& b) { return ad::matmul(x, w) + b; }

/// One-hidden-layer encoder relu(x W + b).
inline Var mlp_encode(const Var& x, const Var& w, const Var& b) { return ad::relu(linear(x, w, b)); }

/// a_sym h W, followed by ReLU unless `last`.
inline Var gcn_layer(const Var& h, const SparseMatrix& a_sym, const Var& w, bool last) {
    Var out = ad::matmul(ad::spmm(a_sym, h), w);
    return last ? out : ad::relu(out);
}

/// Attention neighborhoods: for each target i the segment
/// [offsets[i], offsets[i+1]) of `source` lists i itself followed by its neighbors.
struct AttentionStructure {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> target;  // per slot
    std::vector<std::size_t> source;  // per slot

    explicit AttentionStructure(const Graph& g) {
        offsets.push_back(0);
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            target.push_back(i);
            source.push_back(i);
            for (std::size_t j : g.neighbors(i)) {
                target.push_back(i);
                source.push_back(j);
            }
            offsets.push_back(source.size());
        }
    }
};

struct GatOutput {
    Var features;   // N x F_out
    Var attention;  // slots x 1, softmax-normalized per target
};

/// Single-head graph attention. `attn` is 2F_out x 1; its top half scores the
/// target, the bottom half the source: e_ij = leaky_relu(a^T [W h_i || W h_j]).
inline GatOutput gat_layer(const Var& h, const AttentionStructure& s, const Var& w, const Var& attn) {
    using namespace ad;
    const std::size_t f = w.cols();
    if (attn.rows() != 2 * f || attn.cols() != 1) throw DimensionError("gat_layer: attention vector must be 2F x 1");
    Var wh = matmul(h, w);
    // Split a into its two halves through constant selector matrices.
    Tensor top(f, 2 * f), bottom(f, 2 * f);
    for (std::size_t k = 0; k < f; ++k) {
        top(k, k) = 1.0;
        bottom(k, f + k) = 1.0;
    }
    Var a_target = matmul(h.tape().constant(std::move(top)), attn);
    Var a_source = matmul(h.tape().constant(std::move(bottom)), attn);
    Var score_target = matmul(wh, a_target);  // N x 1
    Var score_source = matmul(wh, a_source);
    Var logits = leaky_relu(gather_rows(score_target, s.target) + gather_rows(score_source, s.source));
    Var weights = segment_softmax(logits, s.offsets);
    Var messages = gather_rows(wh, s.source) * weights;
    return {segment_sum(messages, s.offsets), weights};
}

}  // namespace cuq
