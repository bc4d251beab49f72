#pragma once

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cuqgnn/graphcore/bfs.hpp"
#include "cuqgnn/graphcore/propagation.hpp"
#include "cuqgnn/models/layers.hpp"
#include "cuqgnn/models/model_spec.hpp"
#include "cuqgnn/models/node_beliefs.hpp"
#include "cuqgnn/models/parameters.hpp"
#include "cuqgnn/uqcore/pseudo_count_head.hpp"

namespace cuq {

inline constexpr double kMixturePruneThreshold = 1e-6;

/// Architecture plus parameters. Fitted head statistics (class priors,
/// certainty budget) and the GKDE training set live in non-trainable entries.
struct Model {
    ModelSpec spec;
    ParameterStore params;

    friend bool operator==(const Model&, const Model&) = default;
};

namespace detail {

inline std::string flow_key(std::size_t k, std::size_t l, const char* field) {
    return "flow" + std::to_string(k) + "." + std::to_string(l) + "." + field;
}
inline std::string conv_key(std::size_t l, const char* field) { return "conv" + std::to_string(l) + "." + field; }

}  // namespace detail

/// Fresh parameters drawn from spec.seed: Glorot-uniform weights, zero biases,
/// identity-initialized flows, uniform priors and unit budget.
inline Model initialize_model(const ModelSpec& spec) {
    spec.validate();
    Model m{spec, {}};
    if (spec.kind == ModelKind::gkde) {
        m.params.add("gkde.train_nodes", Tensor(1, 0), false);
        m.params.add("gkde.train_labels", Tensor(1, 0), false);
        return m;
    }
    std::mt19937_64 rng(spec.seed);
    const std::size_t h = spec.hidden;
    m.params.add("encoder.weight", glorot_uniform(spec.n_features, h, rng));
    m.params.add("encoder.bias", Tensor(1, h));
    if (spec.kind == ModelKind::cuq_gcn || spec.kind == ModelKind::cuq_gat) {
        for (std::size_t l = 0; l < spec.conv_layers; ++l) {
            m.params.add(detail::conv_key(l, "weight"), glorot_uniform(h, h, rng));
            if (spec.kind == ModelKind::cuq_gat) m.params.add(detail::conv_key(l, "attention"), glorot_uniform(2 * h, 1, rng));
        }
    }
    if (spec.kind == ModelKind::appnp) {
        m.params.add("output.weight", glorot_uniform(h, spec.n_classes, rng));
        m.params.add("output.bias", Tensor(1, spec.n_classes));
        return m;
    }
    m.params.add("latent.weight", glorot_uniform(h, spec.latent, rng));
    m.params.add("latent.bias", Tensor(1, spec.latent));
    for (std::size_t k = 0; k < spec.n_classes; ++k) {
        const RadialFlowStack s = RadialFlowStack::initialized(spec.latent, spec.flow_depth, rng);
        for (std::size_t l = 0; l < s.layers.size(); ++l) {
            m.params.add(detail::flow_key(k, l, "center"), s.layers[l].center);
            m.params.add(detail::flow_key(k, l, "raw_scale"), Tensor::scalar(s.layers[l].raw_scale));
            m.params.add(detail::flow_key(k, l, "raw_beta"), Tensor::scalar(s.layers[l].raw_beta));
        }
    }
    m.params.add("head.priors", Tensor(1, spec.n_classes, 1.0 / static_cast<double>(spec.n_classes)), false);
    m.params.add("head.budget", Tensor::scalar(spec.certainty_budget > 0.0 ? spec.certainty_budget : 1.0), false);
    return m;
}

/// Flow parameters are excluded from weight decay.
inline bool is_flow_parameter(const std::string& name) { return name.rfind("flow", 0) == 0; }

/// Sets the fitted statistics from the labeled training nodes: empirical class
/// priors, budget = number of training nodes (unless configured), GKDE evidence set.
inline void attach_training_set(Model& m, const Graph& g, std::span<const std::size_t> train) {
    const std::size_t k = m.spec.n_classes;
    if (m.spec.kind == ModelKind::gkde) {
        Tensor nodes(1, train.size()), labels(1, train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            nodes[i] = static_cast<double>(train[i]);
            labels[i] = static_cast<double>(g.label(train[i]));
        }
        m.params.get("gkde.train_nodes") = std::move(nodes);
        m.params.get("gkde.train_labels") = std::move(labels);
        return;
    }
    if (!has_flow_head(m.spec.kind)) return;
    if (train.empty()) throw SplitError("training set is empty");
    Tensor priors(1, k);
    for (std::size_t i : train) {
        const int y = g.label(i);
        if (y < 0 || static_cast<std::size_t>(y) >= k) throw SplitError("training node without a valid label");
        priors[static_cast<std::size_t>(y)] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) priors[c] /= static_cast<double>(train.size());
    m.params.get("head.priors") = std::move(priors);
    m.params.get("head.budget") = Tensor::scalar(
        m.spec.certainty_budget > 0.0 ? m.spec.certainty_budget : static_cast<double>(train.size()));
}

/// Graph-derived operators shared by every forward pass over one graph.
/// Differentiable ops keep references into this object, so it must outlive any tape using it.
struct GraphContext {
    explicit GraphContext(const Graph& g)
        : graph(&g), features(g.features()), rw(rw_normalize(g, &isolated)), sym(sym_normalize(g)), attention(g) {}

    const Graph* graph;
    Tensor features;
    std::size_t isolated = 0;
    SparseMatrix rw;
    SparseMatrix sym;
    AttentionStructure attention;
};

struct ForwardPass {
    Var alpha;      // N x K node-level pseudo-counts (cuq_*, gpn)
    Var alpha_ft;   // N x K feature-level pseudo-counts (gpn, lop_gpn)
    Var log_probs;  // N x K (appnp)
    std::size_t saturated = 0;
};

namespace detail {

inline Var flow_head(const Model& m, const BoundParameters& p, const Var& z, std::size_t* saturated) {
    const std::size_t k = m.spec.n_classes;
    std::vector<std::vector<RadialLayerVars>> flows(k);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t l = 0; l < m.spec.flow_depth; ++l) {
            flows[c].push_back(
                {p[flow_key(c, l, "center")], p[flow_key(c, l, "raw_scale")], p[flow_key(c, l, "raw_beta")]});
        }
    }
    const Tensor& priors = m.params.get("head.priors");
    return pseudo_count_alpha(z, flows, priors.data(), m.params.get("head.budget").item(), m.spec.max_log_density,
                              saturated);
}

}  // namespace detail

/// Runs the model on `tape`. With `use_structure == false` every graph stage is
/// skipped, giving the feature-only counterpart (PostNet, or an MLP for appnp).
inline ForwardPass forward(Tape& tape, const Model& m, const BoundParameters& p, const GraphContext& ctx,
                           bool use_structure = true) {
    const ModelSpec& s = m.spec;
    if (s.kind == ModelKind::gkde) throw ParameterError("gkde has no differentiable forward pass");
    if (ctx.features.cols() != s.n_features) {
        throw DimensionError("graph has " + std::to_string(ctx.features.cols()) + " features, model expects " +
                             std::to_string(s.n_features));
    }
    using namespace ad;
    ForwardPass out;
    Var x = tape.constant(ctx.features);
    Var h = mlp_encode(x, p["encoder.weight"], p["encoder.bias"]);

    if (s.kind == ModelKind::appnp) {
        Var logits = linear(h, p["output.weight"], p["output.bias"]);
        if (use_structure) logits = ad::ppr_propagate(ctx.rw, logits, s.eps, s.ppr_steps);
        out.log_probs = row_log_softmax(logits);
        return out;
    }

    if (use_structure) {
        switch (s.kind) {
            case ModelKind::cuq_ppr: h = ad::ppr_propagate(ctx.rw, h, s.eps, s.ppr_steps); break;
            case ModelKind::cuq_gcn:
                for (std::size_t l = 0; l < s.conv_layers; ++l) {
                    h = gcn_layer(h, ctx.sym, p[cuq::detail::conv_key(l, "weight")], l + 1 == s.conv_layers);
                }
                break;
            case ModelKind::cuq_gat:
                for (std::size_t l = 0; l < s.conv_layers; ++l) {
                    h = gat_layer(h, ctx.attention, p[cuq::detail::conv_key(l, "weight")],
                                  p[cuq::detail::conv_key(l, "attention")])
                            .features;
                    if (l + 1 < s.conv_layers) h = elu(h);
                }
                break;
            default: break;
        }
    }
    Var z = linear(h, p["latent.weight"], p["latent.bias"]);
    Var alpha = cuq::detail::flow_head(m, p, z, &out.saturated);
    if (s.kind == ModelKind::gpn || s.kind == ModelKind::lop_gpn) {
        out.alpha_ft = alpha;
        if (s.kind == ModelKind::gpn) {
            out.alpha = use_structure ? ad::ppr_propagate(ctx.rw, alpha, s.eps, s.ppr_steps) : alpha;
        }
    } else {
        out.alpha = alpha;
    }
    return out;
}

/// Row `node` of the dispersion matrix with entries below `threshold` dropped
/// and the rest renormalized. `pruned` receives the dropped mass.
inline std::vector<std::pair<std::size_t, double>> mixture_weights(const SparseMatrix& rw, std::size_t node, double eps,
                                                                   std::size_t steps,
                                                                   double threshold = kMixturePruneThreshold,
                                                                   double* pruned = nullptr) {
    if (eps == 1.0) {
        if (pruned) *pruned = 0.0;
        return {{node, 1.0}};
    }
    const std::vector<double> row = ppr_weights_row(rw, node, eps, steps);
    std::vector<std::pair<std::size_t, double>> kept;
    double total = 0.0, dropped = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] >= threshold) {
            kept.emplace_back(j, row[j]);
            total += row[j];
        } else {
            dropped += row[j];
        }
    }
    for (auto& [j, w] : kept) w /= total;
    if (pruned) *pruned = dropped;
    return kept;
}

/// Pseudo-count GKDE: alpha_k(i) = 1 + sum over class-k training nodes j of exp(-d(i,j)^2 / (2 sigma^2)),
/// with d the hop distance. Nodes unreachable from every training node keep alpha = 1.
inline NodeBeliefs assemble_gkde(const Graph& g, std::span<const std::size_t> train, std::span<const int> labels,
                                 std::size_t n_classes, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("gkde: sigma must be > 0");
    if (train.size() != labels.size()) throw DimensionError("gkde: one label per training node");
    Tensor alpha(g.n_nodes(), n_classes, 1.0);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t t = 0; t < train.size(); ++t) {
        if (labels[t] < 0 || static_cast<std::size_t>(labels[t]) >= n_classes) {
            throw ParameterError("gkde: training label out of range");
        }
        const auto d = bfs_distances(g, train[t]);
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            if (d[i] == kUnreachable) continue;
            alpha(i, static_cast<std::size_t>(labels[t])) += std::exp(-d[i] * d[i] * inv);
        }
    }
    return NodeBeliefs::from_alpha(ModelKind::gkde, alpha);
}

/// Node beliefs of a trained model on the graph behind `ctx`.
inline NodeBeliefs predict(const Model& m, const GraphContext& ctx, bool use_structure = true) {
    const ModelSpec& s = m.spec;
    if (s.kind == ModelKind::gkde) {
        const Tensor& nodes = m.params.get("gkde.train_nodes");
        const Tensor& labels = m.params.get("gkde.train_labels");
        std::vector<std::size_t> train;
        std::vector<int> y;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            train.push_back(static_cast<std::size_t>(nodes[i]));
            y.push_back(static_cast<int>(labels[i]));
        }
        if (!use_structure) {
            // Without edges every node only sees itself.
            const Graph bare = Graph::from_edges(ctx.graph->n_nodes(), {}, ctx.features, ctx.graph->labels(),
                                                 ctx.graph->n_classes());
            return assemble_gkde(bare, train, y, s.n_classes, s.gkde_sigma);
        }
        return assemble_gkde(*ctx.graph, train, y, s.n_classes, s.gkde_sigma);
    }
    Tape tape;
    const BoundParameters p(tape, m.params, false);
    const ForwardPass f = forward(tape, m, p, ctx, use_structure);
    if (s.kind == ModelKind::appnp) {
        Tensor probs = f.log_probs.value();
        for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(probs[i]);
        return NodeBeliefs::from_probabilities(s.kind, std::move(probs));
    }
    if (s.kind == ModelKind::lop_gpn) {
        const Tensor& a = f.alpha_ft.value();
        std::vector<DirichletBelief> ft;
        for (std::size_t i = 0; i < a.rows(); ++i) ft.emplace_back(std::vector<double>(a.row(i).begin(), a.row(i).end()));
        std::vector<DirichletMixture> mixtures;
        mixtures.reserve(a.rows());
        const double eps = use_structure ? s.eps : 1.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            std::vector<DirichletBelief> comps;
            std::vector<double> w;
            for (auto [j, wj] : mixture_weights(ctx.rw, i, eps, s.ppr_steps)) {
                comps.push_back(ft[j]);
                w.push_back(wj);
            }
            mixtures.emplace_back(std::move(comps), std::move(w));
        }
        return NodeBeliefs::from_mixtures(s.kind, std::move(mixtures));
    }
    return NodeBeliefs::from_alpha(s.kind, f.alpha.value());
}

inline NodeBeliefs predict(const Model& m, const Graph& g) { return predict(m, GraphContext(g)); }

/// Differentiable CUQ pipeline (encoder, convolutions, latent map, flow head).
inline NodeBeliefs assemble_cuq(const Model& m, const GraphContext& ctx) {
    if (m.spec.kind != ModelKind::cuq_ppr && m.spec.kind != ModelKind::cuq_gcn && m.spec.kind != ModelKind::cuq_gat) {
        throw ParameterError("assemble_cuq needs a cuq_* model");
    }
    return predict(m, ctx);
}

inline NodeBeliefs assemble_gpn(const Model& m, const GraphContext& ctx) {
    if (m.spec.kind != ModelKind::gpn) throw ParameterError("assemble_gpn needs a gpn model");
    return predict(m, ctx);
}

inline NodeBeliefs assemble_lop_gpn(const Model& m, const GraphContext& ctx) {
    if (m.spec.kind != ModelKind::lop_gpn) throw ParameterError("assemble_lop_gpn needs a lop_gpn model");
    return predict(m, ctx);
}

inline NodeBeliefs assemble_appnp(const Model& m, const GraphContext& ctx) {
    if (m.spec.kind != ModelKind::appnp) throw ParameterError("assemble_appnp needs an appnp model");
    return predict(m, ctx);
}

}  // namespace cuq
