#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cuqgnn/diffnum/grad_check.hpp"
#include "cuqgnn/graphcore/generators.hpp"
#include "cuqgnn/models/checkpoint.hpp"
#include "cuqgnn/models/llop.hpp"
#include "cuqgnn/trainer/train.hpp"

using namespace cuq;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(r, c);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
    return t;
}

Graph small_graph(std::size_t n, std::uint64_t seed, std::size_t dim = 3, int k = 3) {
    std::mt19937_64 rng(seed);
    std::vector<Graph::Edge> edges;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(i, std::uniform_int_distribution<std::size_t>(0, i - 1)(rng));
    edges.emplace_back(0, n - 1);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    return Graph::from_edges(n, edges, random_tensor(n, dim, rng), labels, k);
}

ModelSpec tiny_spec(ModelKind kind, const Graph& g) {
    ModelSpec s;
    s.kind = kind;
    s.n_features = g.n_features();
    s.n_classes = static_cast<std::size_t>(g.n_classes());
    s.hidden = 4;
    s.latent = 2;
    s.flow_depth = 2;
    s.ppr_steps = 3;
    s.eps = 0.2;
    s.seed = 5;
    return s;
}

Model trained_like(ModelKind kind, const Graph& g) {
    Model m = initialize_model(tiny_spec(kind, g));
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < g.n_nodes(); i += 2) train.push_back(i);
    attach_training_set(m, g, train);
    // Move the flows off their identity initialization.
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(0.0, 0.5);
    for (Parameter& p : m.params)
        if (p.trainable)
            for (double& v : p.value.data()) v += n(rng);
    return m;
}

}  // namespace

TEST(Encoder, ZeroWeightsGiveBiasOnly) {
    Tape t;
    Var x = t.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
    Var w = t.constant(Tensor(2, 3));
    Var b = t.constant(Tensor::from_rows({{0.5, -1.0, 0.0}}));
    EXPECT_EQ(linear(x, w, b).value(), Tensor::from_rows({{0.5, -1.0, 0.0}, {0.5, -1.0, 0.0}}));
    EXPECT_EQ(mlp_encode(x, w, b).value(), Tensor::from_rows({{0.5, 0.0, 0.0}, {0.5, 0.0, 0.0}}));
}

TEST(Encoder, IdentityWeightsPassThroughNonNegativeInput) {
    Tape t;
    const Tensor x = Tensor::from_rows({{1, 0, 2.5}, {0.25, 3, 0}});
    EXPECT_EQ(mlp_encode(t.constant(x), t.constant(Tensor::identity(3)), t.constant(Tensor(1, 3))).value(), x);
}

TEST(Encoder, GradientCheck) {
    std::mt19937_64 rng(1);
    const Tensor w = random_tensor(3, 5, rng), b = random_tensor(1, 5, rng);
    EXPECT_LT(grad_check(
                  [&](const Var& x) {
                      Tape& t = x.tape();
                      return ad::sum(ad::square(mlp_encode(x, t.constant(w), t.constant(b))));
                  },
                  random_tensor(4, 3, rng)),
              1e-4);
    const Tensor x = random_tensor(4, 3, rng);
    EXPECT_LT(grad_check(
                  [&](const Var& wv) {
                      Tape& t = wv.tape();
                      return ad::sum(ad::square(mlp_encode(t.constant(x), wv, t.constant(b))));
                  },
                  w),
              1e-4);
}

TEST(Gcn, SingleNodeIsDenseLayer) {
    const Graph g = Graph::from_edges(1, {}, Tensor(1, 2), {}, 2);
    const SparseMatrix a = sym_normalize(g);
    Tape t;
    Var h = t.constant(Tensor::from_rows({{1.0, -2.0}}));
    Var w = t.constant(Tensor::from_rows({{1.0, 2.0}, {0.5, -1.0}}));
    EXPECT_EQ(gcn_layer(h, a, w, false).value(), ad::relu(ad::matmul(h, w)).value());
}

TEST(Gcn, ConnectedIdenticalNodesGetIdenticalRows) {
    const Graph g = Graph::from_edges(2, {{0, 1}}, Tensor(2, 2), {}, 2);
    const SparseMatrix a = sym_normalize(g);
    Tape t;
    Var h = t.constant(Tensor::from_rows({{0.3, 0.7}, {0.3, 0.7}}));
    Var w = t.constant(Tensor::from_rows({{1.0, -2.0, 0.1}, {0.4, 1.0, 1.0}}));
    const Tensor out = gcn_layer(h, a, w, true).value();
    for (std::size_t j = 0; j < out.cols(); ++j) EXPECT_EQ(out(0, j), out(1, j));
}

TEST(Gcn, GradientCheck) {
    const Graph g = small_graph(10, 2);
    const SparseMatrix a = sym_normalize(g);
    std::mt19937_64 rng(3);
    const Tensor h = random_tensor(10, 3, rng);
    EXPECT_LT(grad_check(
                  [&](const Var& w) {
                      Var x = w.tape().constant(h);
                      return ad::sum(gcn_layer(gcn_layer(x, a, w, false), a, w, true));
                  },
                  random_tensor(3, 3, rng)),
              1e-4);
}

TEST(Gat, IsolatedNodeAttendsToItself) {
    const Graph g = Graph::from_edges(3, {{0, 1}}, Tensor(3, 2), {}, 2);
    const AttentionStructure s(g);
    Tape t;
    Var h = t.constant(Tensor::from_rows({{1, 2}, {3, 4}, {5, -6}}));
    Var w = t.constant(Tensor::from_rows({{1, 0.5}, {-1, 2}}));
    Var attn = t.constant(Tensor::from_rows({{0.3}, {-0.2}, {0.7}, {1.1}}));
    const GatOutput out = gat_layer(h, s, w, attn);
    const Tensor wh = ad::matmul(h, w).value();
    EXPECT_EQ(out.features.value()(2, 0), wh(2, 0));
    EXPECT_EQ(out.features.value()(2, 1), wh(2, 1));
}

TEST(Gat, IdenticalNeighborsGetUniformAttention) {
    // Star: leaves share features, so the center sees three identical scores for its leaves.
    Tensor x = Tensor::from_rows({{0.2, 0.1}, {1, 1}, {1, 1}, {1, 1}});
    const Graph g = Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}}, x, {}, 2);
    const AttentionStructure s(g);
    Tape t;
    const GatOutput out = gat_layer(t.constant(x), s, t.constant(Tensor::from_rows({{1, 2}, {0.5, -1}})),
                                    t.constant(Tensor::from_rows({{0.3}, {-0.2}, {0.7}, {1.1}})));
    const Tensor& a = out.attention.value();
    // Center slot 0 is itself; slots 1..3 are the leaves.
    EXPECT_EQ(a[1], a[2]);
    EXPECT_EQ(a[2], a[3]);
}

TEST(Gat, AttentionRowsSumToOne) {
    const Graph g = small_graph(25, 4);
    const AttentionStructure s(g);
    std::mt19937_64 rng(5);
    Tape t;
    const GatOutput out = gat_layer(t.constant(random_tensor(25, 3, rng, -3, 3)), s,
                                    t.constant(random_tensor(3, 4, rng, -2, 2)), t.constant(random_tensor(8, 1, rng)));
    const Tensor& a = out.attention.value();
    for (std::size_t i = 0; i + 1 < s.offsets.size(); ++i) {
        double total = 0.0;
        for (std::size_t e = s.offsets[i]; e < s.offsets[i + 1]; ++e) total += a[e];
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Gat, GradientCheck) {
    const Graph g = small_graph(10, 6);
    const AttentionStructure s(g);
    std::mt19937_64 rng(7);
    const Tensor h = random_tensor(10, 3, rng), w = random_tensor(3, 3, rng), a = random_tensor(6, 1, rng);
    EXPECT_LT(grad_check(
                  [&](const Var& attn) {
                      Tape& t = attn.tape();
                      return ad::sum(ad::square(gat_layer(t.constant(h), s, t.constant(w), attn).features));
                  },
                  random_tensor(6, 1, rng)),
              1e-4);
    EXPECT_LT(grad_check(
                  [&](const Var& wv) {
                      Tape& t = wv.tape();
                      return ad::sum(ad::square(gat_layer(t.constant(h), s, wv, t.constant(a)).features));
                  },
                  w),
              1e-4);
}

TEST(Axioms, NoNetworkEffectsWhenTeleportIsOne) {
    const Graph g = small_graph(12, 8);
    const GraphContext ctx(g);
    for (ModelKind kind : {ModelKind::cuq_ppr, ModelKind::gpn, ModelKind::lop_gpn, ModelKind::appnp}) {
        Model m = trained_like(kind, g);
        m.spec.eps = 1.0;
        const NodeBeliefs with = predict(m, ctx);
        const NodeBeliefs without = predict(m, ctx, false);
        if (kind == ModelKind::appnp) {
            EXPECT_EQ(with.probabilities(), without.probabilities());
        } else if (kind == ModelKind::lop_gpn) {
            for (std::size_t i = 0; i < g.n_nodes(); ++i) {
                ASSERT_EQ(with.mixtures()[i].size(), 1u);
                EXPECT_EQ(with.mixtures()[i].components()[0], without.mixtures()[i].components()[0]);
            }
        } else {
            EXPECT_EQ(with.beliefs(), without.beliefs()) << model_kind_name(kind);
        }
    }
}

TEST(Axioms, ConfidentNeighborLowersPseudoCountUncertainty) {
    const SparseMatrix a = rw_normalize(Graph::from_edges(2, {{0, 1}}, Tensor(2, 1), {}, 2));
    const Tensor alpha_ft = Tensor::from_rows({{10, 10}, {1, 2}});
    const Tensor agg = ppr_propagate(a, alpha_ft, 0.5, 1);
    const DirichletBelief before({1, 2}), after({agg(1, 0), agg(1, 1)});
    EXPECT_LT(pseudo_count_eu(after), pseudo_count_eu(before));
    EXPECT_EQ(after.alpha0(), 11.5);
}

TEST(Axioms, ConflictingNeighborsRaiseLeastConfidence) {
    const SparseMatrix a = rw_normalize(Graph::from_edges(2, {{0, 1}}, Tensor(2, 1), {}, 2));
    const Tensor alpha_ft = Tensor::from_rows({{10, 1}, {1, 10}});
    const Tensor agg = ppr_propagate(a, alpha_ft, 0.5, 1);
    const DirichletBelief in0({10, 1}), in1({1, 10});
    for (std::size_t i = 0; i < 2; ++i) {
        const DirichletBelief out({agg(i, 0), agg(i, 1)});
        EXPECT_GT(least_confidence(out), least_confidence(in0));
        EXPECT_GT(least_confidence(out), least_confidence(in1));
        EXPECT_EQ(out.alpha0(), 0.5 * in0.alpha0() + 0.5 * in1.alpha0());
    }
}

TEST(Gpn, HandDispersionExample) {
    const SparseMatrix a = rw_normalize(Graph::from_edges(2, {{0, 1}}, Tensor(2, 1), {}, 2));
    const Tensor agg = ppr_propagate(a, Tensor::from_rows({{3, 1}, {1, 3}}), 0.5, 1);
    EXPECT_EQ(agg(0, 0), 2.0);
    EXPECT_EQ(agg(0, 1), 2.0);
}

TEST(Gpn, AggregateIsDispersedFeatureBelief) {
    const Graph g = small_graph(15, 9);
    const GraphContext ctx(g);
    const Model m = trained_like(ModelKind::gpn, g);
    Tape t;
    const BoundParameters p(t, m.params, false);
    const ForwardPass f = forward(t, m, p, ctx);
    const Tensor& ft = f.alpha_ft.value();
    EXPECT_EQ(f.alpha.value(), ppr_propagate(ctx.rw, ft, m.spec.eps, m.spec.ppr_steps));
    const NodeBeliefs b = assemble_gpn(m, ctx);
    for (std::size_t c = 0; c < ft.cols(); ++c) {
        double lo = ft(0, c), hi = ft(0, c);
        for (std::size_t i = 0; i < ft.rows(); ++i) lo = std::min(lo, ft(i, c)), hi = std::max(hi, ft(i, c));
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            EXPECT_GE(b.beliefs()[i].alpha(c), lo - 1e-12);
            EXPECT_LE(b.beliefs()[i].alpha(c), hi + 1e-12);
        }
    }
}

TEST(LopGpn, SymmetricPairMixture) {
    const SparseMatrix a = rw_normalize(Graph::from_edges(2, {{0, 1}}, Tensor(2, 1), {}, 2));
    const auto w = mixture_weights(a, 0, 0.5, 1);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0].second, 0.5);
    EXPECT_EQ(w[1].second, 0.5);
    const DirichletMixture m({DirichletBelief({3, 1}), DirichletBelief({1, 3})}, {w[0].second, w[1].second});
    EXPECT_NEAR(measure(m, Measure::TU), std::numbers::ln2, 1e-15);
}

TEST(LopGpn, MixturesUseDispersionWeights) {
    const Graph g = small_graph(15, 10);
    const GraphContext ctx(g);
    const Model m = trained_like(ModelKind::lop_gpn, g);
    const NodeBeliefs b = assemble_lop_gpn(m, ctx);
    ASSERT_TRUE(b.is_mixture());
    Tape t;
    const BoundParameters p(t, m.params, false);
    const Tensor ft = forward(t, m, p, ctx).alpha_ft.value();
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        const auto row = ppr_weights_row(ctx.rw, i, m.spec.eps, m.spec.ppr_steps);
        // Mixture mean = dispersed component means.
        std::vector<double> expect(ft.cols(), 0.0);
        for (std::size_t j = 0; j < row.size(); ++j) {
            double a0 = 0.0;
            for (double v : ft.row(j)) a0 += v;
            for (std::size_t c = 0; c < ft.cols(); ++c) expect[c] += row[j] * ft(j, c) / a0;
        }
        const auto mean = b.mean(i);
        for (std::size_t c = 0; c < ft.cols(); ++c) EXPECT_NEAR(mean[c], expect[c], 1e-5);
    }
}

TEST(LopGpn, PruningDropsLittleMassOnSbm) {
    SbmParams sp;
    sp.seed = 2;
    const Graph g = gen_sbm(sp);
    const SparseMatrix a = rw_normalize(g);
    for (std::size_t i = 0; i < g.n_nodes(); i += 7) {
        double pruned = 0.0;
        mixture_weights(a, i, 0.1, 10, kMixturePruneThreshold, &pruned);
        EXPECT_LE(pruned, 1e-3) << "node " << i;
    }
}

TEST(Llop, OneHotWeightsReturnComponentDensity) {
    const std::vector<DirichletBelief> qs{DirichletBelief({2, 3, 4}), DirichletBelief({1, 5, 1.5})};
    const std::vector<double> theta{0.2, 0.5, 0.3};
    const double d = llop_pool_density(qs, std::vector<double>{0.0, 1.0}, theta);
    EXPECT_NEAR(d, std::exp(dirichlet_log_density(qs[1].alpha(), theta)), 1e-14 * d);
}

TEST(Llop, PooledDensityIsDirichletOfAveragedCounts) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1.0, 20.0);
    std::gamma_distribution<double> gam(1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + trial % 4, n = 1 + trial % 5;
        std::vector<DirichletBelief> qs;
        std::vector<double> w(n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> a(k);
            for (double& v : a) v = u(rng);
            qs.emplace_back(a);
            total += w[j] = gam(rng);
        }
        for (double& v : w) v /= total;
        double s = 0.0;
        for (std::size_t j = 0; j + 1 < n; ++j) s += w[j];
        w.back() = 1.0 - s;
        std::vector<double> theta(k);
        double tsum = 0.0;
        for (double& v : theta) tsum += v = gam(rng) + 1e-3;
        for (double& v : theta) v /= tsum;
        const DirichletBelief pooled = llop_pool(qs, w);
        const double expect = std::exp(dirichlet_log_density(pooled.alpha(), theta));
        EXPECT_NEAR(llop_pool_density(qs, w, theta), expect, 1e-8 * expect);
    }
}

TEST(Llop, ExternalBayesianity) {
    const std::vector<DirichletBelief> qs{DirichletBelief({2, 7}), DirichletBelief({4, 1}), DirichletBelief({1, 3})};
    const std::vector<double> w{0.5, 0.25, 0.25};
    const std::vector<double> gamma{2, 5};
    std::vector<DirichletBelief> updated;
    for (const auto& q : qs) updated.emplace_back(std::vector<double>{q.alpha(0) + gamma[0], q.alpha(1) + gamma[1]});
    const DirichletBelief pooled = llop_pool(qs, w);
    EXPECT_EQ(llop_pool(updated, w), DirichletBelief({pooled.alpha(0) + gamma[0], pooled.alpha(1) + gamma[1]}));
}

TEST(Llop, PooledCountsMinimizeExpectedKl) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(1.0, 15.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<DirichletBelief> qs;
        std::vector<double> w{0.2, 0.3, 0.5};
        for (int j = 0; j < 3; ++j) qs.emplace_back(std::vector<double>{u(rng), u(rng), u(rng)});
        auto objective = [&](std::span<const double> a) {
            double s = 0.0;
            for (std::size_t j = 0; j < qs.size(); ++j) s += w[j] * dirichlet_kl(a, qs[j].alpha());
            return s;
        };
        const DirichletBelief pooled = llop_pool(qs, w);
        const double best = objective(pooled.alpha());
        for (int p = 0; p < 20; ++p) {
            std::vector<double> delta(3);
            double norm = 0.0;
            for (double& d : delta) {
                d = n(rng);
                norm += d * d;
            }
            const double radius = 0.1 * std::uniform_real_distribution<double>(0.01, 1.0)(rng) / std::sqrt(norm);
            std::vector<double> moved(3);
            for (std::size_t c = 0; c < 3; ++c) moved[c] = pooled.alpha(c) + radius * delta[c];
            EXPECT_LE(best, objective(moved));
        }
    }
}

TEST(Appnp, ProbabilitiesAndTeleportOne) {
    const Graph g = small_graph(12, 13);
    const GraphContext ctx(g);
    Model m = trained_like(ModelKind::appnp, g);
    const NodeBeliefs b = assemble_appnp(m, ctx);
    ASSERT_TRUE(b.is_first_order());
    for (std::size_t i = 0; i < b.size(); ++i) {
        double s = 0.0;
        for (double v : b.probabilities().row(i)) s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    m.spec.eps = 1.0;
    EXPECT_EQ(predict(m, ctx).probabilities(), predict(m, ctx, false).probabilities());
}

TEST(Appnp, RejectsSecondOrderMeasures) {
    const Graph g = small_graph(6, 14);
    const NodeBeliefs b = predict(trained_like(ModelKind::appnp, g), g);
    EXPECT_NO_THROW(b.uncertainty(0, Measure::TU));
    for (Measure m : {Measure::AU, Measure::EU, Measure::EU_PC, Measure::EU_SO}) {
        EXPECT_THROW(b.uncertainty(0, m), UnsupportedMeasureError) << measure_name(m);
    }
    EXPECT_EQ(b.supported_measures(), std::vector<Measure>{Measure::TU});
}

TEST(Gkde, Examples) {
    // Path 0-1-2 plus isolated node 3.
    const Graph g = Graph::from_edges(4, {{0, 1}, {1, 2}}, Tensor(4, 1), {0, 1, 1, 0}, 2);
    const std::vector<std::size_t> train{0, 2};
    const std::vector<int> y{0, 1};
    const NodeBeliefs b = assemble_gkde(g, train, y, 2, 1.0);
    EXPECT_GE(b.beliefs()[0].alpha(0), 2.0);
    EXPECT_EQ(b.beliefs()[3], DirichletBelief({1, 1}));
    EXPECT_NEAR(b.beliefs()[1].alpha(0), 1.0 + std::exp(-0.5), 1e-15);
    const NodeBeliefs sharp = assemble_gkde(g, train, y, 2, 1e-3);
    EXPECT_EQ(sharp.beliefs()[0], DirichletBelief({2, 1}));
    EXPECT_EQ(sharp.beliefs()[1], DirichletBelief({1, 1}));
}

TEST(Cuq, IsomorphicNodesShareBeliefs) {
    // Path 0-1-2 where the end nodes carry equal features.
    const Tensor x = Tensor::from_rows({{0.3, -0.2, 1.0}, {1.5, 0.4, -0.7}, {0.3, -0.2, 1.0}});
    const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}}, x, {0, 1, 2}, 3);
    for (ModelKind kind : {ModelKind::cuq_ppr, ModelKind::cuq_gcn, ModelKind::cuq_gat, ModelKind::gpn}) {
        const NodeBeliefs b = predict(trained_like(kind, g), g);
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_NEAR(b.beliefs()[0].alpha(c), b.beliefs()[2].alpha(c), 1e-12 * b.beliefs()[0].alpha(c))
                << model_kind_name(kind);
        }
    }
}

TEST(Cuq, PermutationEquivariance) {
    const Graph g = small_graph(14, 15);
    std::vector<std::size_t> perm(14);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 9 + 4) % 14;
    const Graph gp = g.permuted(perm);
    for (ModelKind kind : kAllModelKinds) {
        Model m = trained_like(kind, g);
        Model mp = m;
        if (kind == ModelKind::gkde) {
            std::vector<std::size_t> train;
            for (std::size_t i = 0; i < 14; i += 2) train.push_back(perm[i]);
            std::sort(train.begin(), train.end());
            attach_training_set(mp, gp, train);
        }
        const NodeBeliefs b = predict(m, g), bp = predict(mp, gp);
        for (std::size_t i = 0; i < 14; ++i) {
            const auto a = b.mean(i), ap = bp.mean(perm[i]);
            for (std::size_t c = 0; c < a.size(); ++c) EXPECT_NEAR(a[c], ap[c], 1e-10) << model_kind_name(kind);
            if (!b.is_first_order()) {
                EXPECT_NEAR(b.uncertainty(i, Measure::EU_PC), bp.uncertainty(perm[i], Measure::EU_PC), 1e-8)
                    << model_kind_name(kind);
            }
        }
    }
}

TEST(Cuq, UceGradientThroughGcnPipeline) {
    const Graph g = small_graph(10, 16);
    const GraphContext ctx(g);
    const Model m = trained_like(ModelKind::cuq_gcn, g);
    const std::vector<std::size_t> nodes{0, 3, 4, 8};
    for (const Parameter& target : m.params) {
        if (!target.trainable) continue;
        const double err = grad_check(
            [&](const Var& x) {
                BoundParameters p(x.tape(), m.params, false);
                p.rebind(target.name, x);
                return objective(x.tape(), m, p, ctx, nodes, 0.0).loss;
            },
            target.value);
        EXPECT_LT(err, 1e-4) << target.name;
    }
}

TEST(Checkpoint, RoundTripIsBitExact) {
    const Graph g = small_graph(10, 17);
    for (ModelKind kind : kAllModelKinds) {
        const Model m = trained_like(kind, g);
        std::istringstream is(checkpoint_bytes(m));
        const Model back = load_checkpoint(is);
        EXPECT_EQ(back, m) << model_kind_name(kind);
        EXPECT_EQ(checkpoint_bytes(back), checkpoint_bytes(m));
        const NodeBeliefs a = predict(m, g), b = predict(back, g);
        for (std::size_t i = 0; i < g.n_nodes(); ++i) EXPECT_EQ(a.mean(i), b.mean(i));
    }
}

TEST(Checkpoint, TruncatedPayloadIsIntegrityError) {
    const Graph g = small_graph(6, 18);
    std::string bytes = checkpoint_bytes(trained_like(ModelKind::cuq_gcn, g));
    bytes.resize(bytes.size() - 3);
    std::istringstream is(bytes);
    EXPECT_THROW(load_checkpoint(is), IntegrityError);
    std::istringstream garbage("hello\n");
    EXPECT_THROW(load_checkpoint(garbage), IntegrityError);
}

TEST(Checkpoint, VersionMismatchIsRejected) {
    const Graph g = small_graph(6, 19);
    std::string bytes = checkpoint_bytes(trained_like(ModelKind::gpn, g));
    const auto pos = bytes.find(" v1\n");
    ASSERT_NE(pos, std::string::npos);
    bytes.replace(pos, 4, " v2\n");
    std::istringstream is(bytes);
    EXPECT_THROW(load_checkpoint(is), FormatVersionError);
}

TEST(ModelSpec, SettingsRoundTrip) {
    ModelSpec s;
    s.kind = ModelKind::lop_gpn;
    s.n_features = 7;
    s.n_classes = 3;
    s.eps = 0.15;
    s.certainty_budget = 12.5;
    ModelSpec back;
    for (const auto& [k, v] : s.to_map()) back.set(k, v);
    EXPECT_EQ(back, s);
    EXPECT_THROW(back.set("depth", "3"), ParameterError);
    EXPECT_THROW(back.set("eps", "x"), ParameterError);
    s.eps = 0.0;
    EXPECT_THROW(s.validate(), ParameterError);
}
