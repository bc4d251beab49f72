#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cuqgnn/diffnum/grad_check.hpp"
#include "cuqgnn/graphcore/generators.hpp"
#include "cuqgnn/trainer/train.hpp"
#include "cuqgnn/uqcore/monte_carlo.hpp"

using namespace cuq;

namespace {

Graph labeled_graph(std::size_t n, std::uint64_t seed, int k = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Graph::Edge> edges;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(i, std::uniform_int_distribution<std::size_t>(0, i - 1)(rng));
    std::vector<int> labels(n);
    Tensor x(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = normal(rng) + (j == static_cast<std::size_t>(labels[i]) ? 1.5 : 0.0);
    }
    return Graph::from_edges(n, edges, x, labels, k);
}

ModelSpec small_spec(ModelKind kind, const Graph& g) {
    ModelSpec s;
    s.kind = kind;
    s.n_features = g.n_features();
    s.n_classes = static_cast<std::size_t>(g.n_classes());
    s.hidden = 5;
    s.latent = 2;
    s.flow_depth = 2;
    s.ppr_steps = 4;
    s.eps = 0.2;
    return s;
}

Graph sbm_benchmark(std::uint64_t seed) {
    SbmParams p;
    p.seed = seed;
    return gen_sbm(p);
}

Var alpha_var(Tape& t, const std::vector<std::vector<double>>& rows) {
    Tensor a(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) a(i, k) = rows[i][k];
    return t.constant(std::move(a));
}

}  // namespace

TEST(Uce, FlatBeliefGivesExactlyOne) {
    Tape t;
    const std::vector<int> labels{0};
    const std::vector<std::size_t> nodes{0};
    EXPECT_EQ(uce_loss(alpha_var(t, {{1, 1}}), nodes, labels).value().item(), 1.0);
}

TEST(Uce, SymmetricBeliefIgnoresLabel) {
    Tape t;
    Var a = alpha_var(t, {{3, 3, 3}});
    const std::vector<std::size_t> nodes{0};
    const double l0 = uce_loss(a, nodes, std::vector<int>{0}).value().item();
    EXPECT_EQ(l0, uce_loss(a, nodes, std::vector<int>{1}).value().item());
    EXPECT_EQ(l0, uce_loss(a, nodes, std::vector<int>{2}).value().item());
}

TEST(Uce, ConfidentCorrectBeliefApproachesZero) {
    Tape t;
    const double l = uce_loss(alpha_var(t, {{1e5, 1, 1}}), std::vector<std::size_t>{0}, std::vector<int>{0})
                         .value()
                         .item();
    EXPECT_GT(l, 0.0);
    EXPECT_LT(l, 1e-4);
}

TEST(Uce, MatchesMonteCarloOnRandomBeliefs) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1.0, 30.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 2 + trial % 4;
        std::vector<double> a(k);
        for (double& v : a) v = u(rng);
        const std::size_t y = static_cast<std::size_t>(trial) % k;
        Tape t;
        const double closed =
            uce_loss(alpha_var(t, {a}), std::vector<std::size_t>{0}, std::vector<int>{static_cast<int>(y)}).value().item();
        const McEstimate est = mc_uce(DirichletBelief(a), y, 100000, 40 + trial);
        EXPECT_NEAR(closed, est.mean, 3.0 * est.se) << "trial " << trial;
    }
}

TEST(EntropyRegularizer, MatchesClosedFormEntropy) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1.0, 20.0);
    Tape t;
    std::vector<std::vector<double>> rows(6, std::vector<double>(4));
    for (auto& r : rows)
        for (double& v : r) v = u(rng);
    const Tensor h = dirichlet_entropy(alpha_var(t, rows)).value();
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_NEAR(h[i], second_order_eu(DirichletBelief(rows[i])), 1e-12);
}

TEST(EntropyRegularizer, FlatBeliefIsTheMinimumAmongSymmetricTwoClassBeliefs) {
    const std::vector<std::size_t> nodes{0};
    double previous = -std::numeric_limits<double>::infinity();
    for (double c : {1.0, 1.5, 2.0, 4.0, 8.0, 32.0}) {
        Tape t;
        const double reg = entropy_regularizer(alpha_var(t, {{c, c}}), nodes).value().item();
        if (c == 1.0) {
            EXPECT_NEAR(reg, 0.0, 1e-15);
        }
        EXPECT_GT(reg, previous);
        previous = reg;
    }
}

TEST(EntropyRegularizer, GradientCheck) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1.0, 10.0);
    Tensor a(5, 3);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = u(rng);
    const std::vector<std::size_t> nodes{0, 2, 4};
    EXPECT_LT(grad_check([&](const Var& x) { return entropy_regularizer(x, nodes); }, a), 1e-4);
}

TEST(Objective, ZeroEntropyWeightIsPureUce) {
    const Graph g = labeled_graph(12, 6);
    const GraphContext ctx(g);
    Model m = initialize_model(small_spec(ModelKind::cuq_gcn, g));
    const std::vector<std::size_t> nodes{0, 1, 2, 5};
    attach_training_set(m, g, nodes);
    Tape t;
    const BoundParameters p(t, m.params, false);
    const Objective o = objective(t, m, p, ctx, nodes, 0.0);
    EXPECT_EQ(o.loss.value().item(), uce_loss(o.pass.alpha, nodes, g.labels()).value().item());
}

TEST(Objective, GradientThroughEveryPipeline) {
    const Graph g = labeled_graph(10, 7);
    const GraphContext ctx(g);
    const std::vector<std::size_t> nodes{0, 1, 2, 4, 7};
    for (ModelKind kind : {ModelKind::cuq_gcn, ModelKind::cuq_ppr, ModelKind::cuq_gat, ModelKind::gpn,
                           ModelKind::lop_gpn, ModelKind::appnp}) {
        Model m = initialize_model(small_spec(kind, g));
        attach_training_set(m, g, nodes);
        std::mt19937_64 rng(8);
        std::normal_distribution<double> n(0.0, 0.4);
        for (Parameter& p : m.params)
            if (p.trainable)
                for (double& v : p.value.data()) v += n(rng);
        for (const Parameter& target : m.params) {
            if (!target.trainable) continue;
            const double err = grad_check(
                [&](const Var& x) {
                    BoundParameters p(x.tape(), m.params, false);
                    p.rebind(target.name, x);
                    return objective(x.tape(), m, p, ctx, nodes, 0.01).loss;
                },
                target.value);
            EXPECT_LT(err, 1e-4) << model_kind_name(kind) << " " << target.name;
        }
    }
}

TEST(Splits, StratifiedCounts) {
    std::vector<int> labels(1000);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
    const Graph g = Graph::from_edges(1000, {}, Tensor(1000, 1), labels, 2);
    SplitSpec s;
    const Split split = make_splits(g, s).front();
    EXPECT_EQ(split.train.size(), 50u);
    EXPECT_EQ(split.val.size(), 150u);
    EXPECT_EQ(split.test.size(), 800u);
    std::size_t train0 = 0, val0 = 0, test0 = 0;
    for (std::size_t i : split.train) train0 += g.label(i) == 0;
    for (std::size_t i : split.val) val0 += g.label(i) == 0;
    for (std::size_t i : split.test) test0 += g.label(i) == 0;
    EXPECT_EQ(train0, 25u);
    EXPECT_EQ(val0, 75u);
    EXPECT_EQ(test0, 400u);
}

TEST(Splits, DeterministicDisjointAndExhaustive) {
    const Graph g = sbm_benchmark(1);
    SplitSpec s;
    s.seed = 9;
    s.n_repeats = 4;
    const auto a = make_splits(g, s), b = make_splits(g, s);
    EXPECT_EQ(a, b);
    EXPECT_NE(a[0], a[1]);
    for (const Split& sp : a) {
        std::set<std::size_t> all;
        for (const auto* part : {&sp.train, &sp.val, &sp.test}) all.insert(part->begin(), part->end());
        EXPECT_EQ(all.size(), sp.train.size() + sp.val.size() + sp.test.size());
        EXPECT_EQ(all.size(), g.n_nodes());
    }
    // Stratification within one node of the class share.
    for (const Split& sp : a) {
        std::vector<double> count(4, 0.0);
        for (std::size_t i : sp.train) count[static_cast<std::size_t>(g.label(i))] += 1.0;
        for (double c : count) EXPECT_NEAR(c, 0.05 * 50, 1.0);
    }
}

TEST(Splits, UnlabeledNodesAreLeftOut) {
    std::vector<int> labels{0, 1, kUnlabeled, 0, 1, 0, 1, kUnlabeled};
    const Graph g = Graph::from_edges(8, {}, Tensor(8, 1), labels, 2);
    SplitSpec s;
    s.train = 0.5;
    s.val = 0.25;
    s.test = 0.25;
    const Split sp = make_splits(g, s).front();
    EXPECT_EQ(sp.train.size() + sp.val.size() + sp.test.size(), 6u);
}

TEST(Splits, ClassTooSmallNamesTheClass) {
    std::vector<int> labels(100, 0);
    labels[7] = 1;
    const Graph g = Graph::from_edges(100, {}, Tensor(100, 1), labels, 2);
    try {
        make_splits(g, SplitSpec{});
        FAIL() << "expected a split error";
    } catch (const SplitError& e) {
        EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos) << e.what();
    }
}

TEST(Splits, FractionsMustSumToOne) {
    const Graph g = sbm_benchmark(1);
    SplitSpec s;
    s.test = 0.5;
    EXPECT_THROW(make_splits(g, s), SplitError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Adam opt(0.01);
    Tensor p = Tensor::from_rows({{1.0, -2.0, 0.5}});
    opt.step("p", p, Tensor::from_rows({{3.0, -0.1, 0.0}}), 0.0);
    EXPECT_NEAR(p[0], 0.99, 1e-9);
    EXPECT_NEAR(p[1], -1.99, 1e-9);
    EXPECT_EQ(p[2], 0.5);
}

TEST(Adam, MinimizesQuadratic) {
    Adam opt(0.05);
    Tensor p = Tensor::from_rows({{3.0, -4.0}});
    for (int i = 0; i < 2000; ++i) {
        Tensor g = p;
        for (double& v : g.data()) v *= 2.0;
        opt.step("p", p, g, 0.0);
    }
    EXPECT_NEAR(p[0], 0.0, 1e-3);
    EXPECT_NEAR(p[1], 0.0, 1e-3);
}

TEST(Train, ZeroEpochsLeavesParametersUnchanged) {
    const Graph g = labeled_graph(30, 10);
    SplitSpec ss;
    ss.train = 0.4;
    ss.val = 0.3;
    ss.test = 0.3;
    const Split split = make_splits(g, ss).front();
    TrainConfig cfg;
    cfg.max_epochs = 0;
    const ModelSpec spec = small_spec(ModelKind::cuq_gcn, g);
    const TrainResult r = train(spec, g, split, cfg);
    const Model fresh = initialize_model(r.model.spec);
    for (const Parameter& p : fresh.params) {
        if (p.trainable) {
            EXPECT_EQ(r.model.params.get(p.name), p.value) << p.name;
        }
    }
    EXPECT_TRUE(r.history.empty());
}

TEST(Train, DeterministicPerSeed) {
    const Graph g = labeled_graph(30, 11);
    SplitSpec ss;
    ss.train = 0.4;
    ss.val = 0.3;
    ss.test = 0.3;
    const Split split = make_splits(g, ss).front();
    TrainConfig cfg;
    cfg.max_epochs = 30;
    cfg.patience = 30;
    cfg.seed = 3;
    const TrainResult a = train(small_spec(ModelKind::cuq_gat, g), g, split, cfg);
    const TrainResult b = train(small_spec(ModelKind::cuq_gat, g), g, split, cfg);
    EXPECT_EQ(a.model, b.model);
    cfg.seed = 4;
    EXPECT_NE(train(small_spec(ModelKind::cuq_gat, g), g, split, cfg).model, a.model);
}

TEST(Train, RestoresBestValidationParameters) {
    const Graph g = sbm_benchmark(2);
    const Split split = make_splits(g, SplitSpec{}).front();
    TrainConfig cfg;
    cfg.max_epochs = 150;
    cfg.patience = 20;
    const TrainResult r = train(small_spec(ModelKind::gpn, g), g, split, cfg);
    double best = 0.0;
    for (const HistoryRow& row : r.history) best = std::max(best, row.val_acc);
    EXPECT_EQ(r.best_val_acc, best);
    const NodeBeliefs b = predict(r.model, g);
    std::size_t hits = 0;
    for (std::size_t i : split.val) hits += b.predicted(i) == static_cast<std::size_t>(g.label(i));
    EXPECT_GE(static_cast<double>(hits) / static_cast<double>(split.val.size()), best);
}

TEST(Train, GcnReachesValidationAccuracyOnSbm) {
    const Graph g = sbm_benchmark(0);
    SplitSpec ss;
    ss.seed = 2;
    const Split split = make_splits(g, ss).front();
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    ModelSpec spec;
    spec.kind = ModelKind::cuq_gcn;
    spec.n_features = g.n_features();
    spec.n_classes = 4;
    const TrainResult r = train(spec, g, split, cfg);
    EXPECT_GE(r.best_val_acc, 0.85);
    EXPECT_LE(r.history.size(), 200u);
}

TEST(Train, NonFiniteLossAbortsWithDiagnostic) {
    const Graph g = labeled_graph(20, 12);
    SplitSpec ss;
    ss.train = 0.5;
    ss.val = 0.25;
    ss.test = 0.25;
    const Split split = make_splits(g, ss).front();
    Model m = initialize_model(small_spec(ModelKind::cuq_ppr, g));
    m.params.get("latent.bias")[0] = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    try {
        train(m, g, split, cfg);
        FAIL() << "expected a training error";
    } catch (const TrainingError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("epoch 0"), std::string::npos) << what;
        EXPECT_NE(what.find("latent.bias=nan"), std::string::npos) << what;
    }
}

TEST(Train, HistoryIsFiniteAndWrittenAsCsv) {
    const Graph g = labeled_graph(30, 13);
    SplitSpec ss;
    ss.train = 0.4;
    ss.val = 0.3;
    ss.test = 0.3;
    TrainConfig cfg;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    const TrainResult r = train(small_spec(ModelKind::lop_gpn, g), g, make_splits(g, ss).front(), cfg);
    ASSERT_EQ(r.history.size(), 10u);
    for (const HistoryRow& row : r.history) EXPECT_TRUE(std::isfinite(row.train_loss));
    std::ostringstream os;
    write_history_csv(os, r.history);
    const std::string csv = os.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,val_acc,val_uce,saturation");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(TrainConfig, SettingsAndValidation) {
    TrainConfig c;
    c.set("lr", "0.01");
    c.set("max_epochs", "20");
    c.set("patience", "5");
    EXPECT_EQ(c.lr, 0.01);
    EXPECT_NO_THROW(c.validate());
    c.set("patience", "50");
    EXPECT_THROW(c.validate(), ParameterError);
    EXPECT_THROW(c.set("momentum", "0.9"), ParameterError);
}
