#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cuqgnn/diffnum/grad_check.hpp"
#include "cuqgnn/models/llop.hpp"
#include "cuqgnn/trainer/train.hpp"
#include "cuqgnn/uqcore/monte_carlo.hpp"

namespace cuq {

/// Outcome of one oracle suite; `detail` names the worst case seen.
struct VerifyResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct VerifyOptions {
    std::size_t mc_samples = 1'000'000;
    std::size_t n_beliefs = 50;
    std::size_t n_uce_pairs = 30;
    double z_limit = 3.0;  // allowed |closed form - estimate| in standard errors
    std::uint64_t seed = 2024;
};

namespace detail {

inline std::vector<double> random_alpha(std::size_t k, std::mt19937_64& rng, double lo = 1.0, double hi = 20.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> a(k);
    for (double& v : a) v = u(rng);
    return a;
}

inline std::vector<double> random_simplex_point(std::size_t k, std::mt19937_64& rng) {
    std::gamma_distribution<double> gam(1.0, 1.0);
    std::vector<double> t(k);
    double s = 0.0;
    for (double& v : t) s += v = gam(rng) + 1e-3;
    for (double& v : t) v /= s;
    return t;
}

class Recorder {
public:
    explicit Recorder(std::string name) { r_.name = std::move(name); }

    void check(bool ok, const std::string& what) {
        if (!ok && r_.passed) {
            r_.passed = false;
            r_.detail = what;
        }
    }

    VerifyResult finish(const std::string& summary) {
        if (r_.passed) r_.detail = summary;
        return r_;
    }

private:
    VerifyResult r_;
};

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace detail

/// Closed-form AU and EU_SO against Monte-Carlo means (z_limit SE) on random beliefs
/// with K cycling through 2, 3, 5, plus the flat-belief spot values.
inline VerifyResult verify_measures(const VerifyOptions& o = {}) {
    detail::Recorder rec("dirichlet measures vs monte carlo");
    std::mt19937_64 rng(o.seed);
    const std::size_t ks[] = {2, 3, 5};
    double worst = 0.0;
    for (std::size_t b = 0; b < o.n_beliefs; ++b) {
        const DirichletBelief q(detail::random_alpha(ks[b % 3], rng));
        const EntropyEstimates mc = mc_entropies(q, o.mc_samples, o.seed + 17 * b);
        for (Measure m : {Measure::AU, Measure::EU_SO}) {
            const McEstimate& est = m == Measure::AU ? mc.au : mc.eu_so;
            const double z = std::abs(measure(q, m) - est.mean) / est.se;
            worst = std::max(worst, z);
            rec.check(z <= o.z_limit, std::string(measure_name(m)) + " belief " + std::to_string(b) + " off by " + detail::fmt(z) + " SE");
        }
    }
    const DirichletBelief flat({1.0, 1.0});
    rec.check(std::abs(aleatoric_uncertainty(flat) - 0.5) < 1e-14, "AU(Dir(1,1)) != 0.5");
    rec.check(std::abs(second_order_eu(flat)) < 1e-14, "EU_SO(Dir(1,1)) != 0");
    rec.check(std::abs(total_uncertainty(flat) - std::log(2.0)) < 1e-15, "TU(Dir(1,1)) != ln 2");
    return rec.finish("worst deviation " + detail::fmt(worst) + " SE");
}

/// Closed-form UCE against Monte-Carlo estimates, and UCE(Dir(1,1)) = 1 exactly.
inline VerifyResult verify_uce(const VerifyOptions& o = {}) {
    detail::Recorder rec("uce closed form vs monte carlo");
    std::mt19937_64 rng(o.seed + 1);
    double worst = 0.0;
    for (std::size_t t = 0; t < o.n_uce_pairs; ++t) {
        const std::size_t k = 2 + t % 4;
        const std::vector<double> a = detail::random_alpha(k, rng);
        const std::size_t y = t % k;
        Tape tape;
        Tensor at(1, k);
        for (std::size_t c = 0; c < k; ++c) at(0, c) = a[c];
        const double closed = uce_loss(tape.constant(at), std::vector<std::size_t>{0}, std::vector<int>{static_cast<int>(y)})
                                  .value()
                                  .item();
        const McEstimate est = mc_uce(DirichletBelief(a), y, o.mc_samples, o.seed + 101 * t);
        const double z = std::abs(closed - est.mean) / est.se;
        worst = std::max(worst, z);
        rec.check(z <= o.z_limit, "pair " + std::to_string(t) + " off by " + detail::fmt(z) + " SE");
    }
    Tape tape;
    const double flat = uce_loss(tape.constant(Tensor::from_rows({{1.0, 1.0}})), std::vector<std::size_t>{0}, std::vector<int>{0})
                            .value()
                            .item();
    rec.check(flat == 1.0, "UCE(Dir(1,1)) = " + detail::fmt(flat));
    return rec.finish("worst deviation " + detail::fmt(worst) + " SE");
}

/// Pooled density equals the Dirichlet of averaged counts; pooling commutes with
/// count updates; pooled counts minimize the weighted KL objective locally.
inline VerifyResult verify_llop(const VerifyOptions& o = {}) {
    detail::Recorder rec("log-linear pooling");
    std::mt19937_64 rng(o.seed + 2);
    std::gamma_distribution<double> gam(1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(trial) % 4, n = 1 + static_cast<std::size_t>(trial) % 5;
        std::vector<DirichletBelief> qs;
        for (std::size_t j = 0; j < n; ++j) qs.emplace_back(detail::random_alpha(k, rng, 1.0, 20.0));
        std::vector<double> w = detail::random_simplex_point(n, rng);
        double head = 0.0;
        for (std::size_t j = 0; j + 1 < n; ++j) head += w[j];
        w.back() = 1.0 - head;
        const std::vector<double> theta = detail::random_simplex_point(k, rng);
        const double pooled = llop_pool_density(qs, w, theta);
        const double direct = std::exp(dirichlet_log_density(llop_pool(qs, w).alpha(), theta));
        const double rel = std::abs(pooled - direct) / direct;
        worst = std::max(worst, rel);
        rec.check(rel < 1e-8, "identity trial " + std::to_string(trial) + " relative error " + detail::fmt(rel));

        std::vector<double> gamma = detail::random_alpha(k, rng, 0.0, 5.0);
        std::vector<DirichletBelief> updated;
        for (const auto& q : qs) {
            std::vector<double> a(q.alpha().begin(), q.alpha().end());
            for (std::size_t c = 0; c < k; ++c) a[c] += gamma[c];
            updated.emplace_back(a);
        }
        const DirichletBelief lhs = llop_pool(updated, w);
        const DirichletBelief base = llop_pool(qs, w);
        for (std::size_t c = 0; c < k; ++c) {
            const double err = std::abs(lhs.alpha(c) - (base.alpha(c) + gamma[c]));
            rec.check(err <= 1e-12 * lhs.alpha(c), "external bayesianity trial " + std::to_string(trial));
        }
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<DirichletBelief> qs;
        for (int j = 0; j < 3; ++j) qs.emplace_back(detail::random_alpha(3, rng, 1.0, 15.0));
        const std::vector<double> w{0.2, 0.3, 0.5};
        auto objective = [&](std::span<const double> a) {
            double s = 0.0;
            for (std::size_t j = 0; j < qs.size(); ++j) s += w[j] * dirichlet_kl(a, qs[j].alpha());
            return s;
        };
        const DirichletBelief pooled = llop_pool(qs, w);
        const double best = objective(pooled.alpha());
        for (int p = 0; p < 20; ++p) {
            std::vector<double> moved(pooled.alpha().begin(), pooled.alpha().end());
            for (double& v : moved) v += 0.05 * normal(rng);
            rec.check(best <= objective(moved), "KL optimality trial " + std::to_string(trial));
        }
    }
    return rec.finish("worst identity error " + detail::fmt(worst));
}

/// Propagation against a dense oracle built straight from the edge list, the
/// identity at eps = 1, and componentwise convex-combination bounds.
inline VerifyResult verify_ppr(const VerifyOptions& o = {}) {
    detail::Recorder rec("ppr propagation");
    std::mt19937_64 rng(o.seed + 3);
    std::uniform_int_distribution<std::size_t> size(2, 50);
    std::uniform_real_distribution<double> teleport(0.05, 1.0), value(-5.0, 5.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = size(rng);
        std::bernoulli_distribution coin(3.0 / static_cast<double>(n));
        std::vector<Graph::Edge> edges;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v)
                if (coin(rng)) edges.emplace_back(u, v);
        const Graph g = Graph::from_edges(n, edges, Tensor(n, 1), {}, 2);
        Tensor h(n, 3);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = value(rng);
        const double eps = teleport(rng);
        const std::size_t steps = std::uniform_int_distribution<std::size_t>(0, 12)(rng);

        // Row-stochastic step: node i keeps eps of itself and averages its neighbours with weight 1 - eps.
        Tensor step(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            step(i, i) += eps;
            if (g.degree(i) == 0) {
                step(i, i) += 1.0 - eps;
                continue;
            }
            for (std::size_t j : g.neighbors(i)) step(i, j) += (1.0 - eps) / static_cast<double>(g.degree(i));
        }
        Tensor dense = h;
        for (std::size_t l = 0; l < steps; ++l) dense = matmul(step, dense);
        const SparseMatrix a = rw_normalize(g);
        const Tensor fast = ppr_propagate(a, h, eps, steps);
        for (std::size_t i = 0; i < fast.size(); ++i) {
            const double err = std::abs(fast[i] - dense[i]);
            worst = std::max(worst, err);
            rec.check(err <= 1e-10, "dense oracle trial " + std::to_string(trial) + " error " + detail::fmt(err));
        }
        rec.check(ppr_propagate(a, h, 1.0, steps) == h, "eps = 1 is not the identity");

        // Convex bounds on the row-normalized operator.
        const Tensor pi = ppr_propagate(a, Tensor::identity(n), eps, steps);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += pi(i, j);
            rec.check(std::abs(row - 1.0) < 1e-10, "propagation weights do not sum to one");
        }
        for (std::size_t c = 0; c < h.cols(); ++c) {
            double lo = h(0, c), hi = h(0, c);
            for (std::size_t i = 0; i < n; ++i) {
                lo = std::min(lo, h(i, c));
                hi = std::max(hi, h(i, c));
            }
            for (std::size_t i = 0; i < n; ++i)
                rec.check(fast(i, c) >= lo - 1e-12 && fast(i, c) <= hi + 1e-12, "convex bound violated");
        }
    }
    return rec.finish("worst dense deviation " + detail::fmt(worst));
}

/// A1: eps = 1 removes network effects bitwise. A2: a confident neighbour lowers
/// pseudo-count uncertainty. A3: conflicting confident neighbours raise least
/// confidence above both inputs while total counts average.
inline VerifyResult verify_axioms(const VerifyOptions& o = {}) {
    detail::Recorder rec("structural axioms");
    std::mt19937_64 rng(o.seed + 4);
    std::vector<Graph::Edge> edges;
    const std::size_t n = 12;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(i, std::uniform_int_distribution<std::size_t>(0, i - 1)(rng));
    Tensor x(n, 3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : x.data()) v = normal(rng);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
    const Graph g = Graph::from_edges(n, edges, x, labels, 3);
    const GraphContext ctx(g);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; i += 2) train.push_back(i);
    for (ModelKind kind : {ModelKind::cuq_ppr, ModelKind::gpn, ModelKind::lop_gpn, ModelKind::appnp}) {
        ModelSpec spec;
        spec.kind = kind;
        spec.n_features = 3;
        spec.n_classes = 3;
        spec.hidden = 4;
        spec.latent = 2;
        spec.flow_depth = 2;
        spec.eps = 1.0;
        Model m = initialize_model(spec);
        attach_training_set(m, g, train);
        for (Parameter& p : m.params)
            if (p.trainable)
                for (double& v : p.value.data()) v += 0.5 * normal(rng);
        const NodeBeliefs with = predict(m, ctx), without = predict(m, ctx, false);
        bool same = true;
        if (kind == ModelKind::appnp) {
            same = with.probabilities() == without.probabilities();
        } else if (kind == ModelKind::lop_gpn) {
            for (std::size_t i = 0; i < n; ++i)
                same = same && with.mixtures()[i].size() == 1 &&
                       with.mixtures()[i].components()[0] == without.mixtures()[i].components()[0];
        } else {
            same = with.beliefs() == without.beliefs();
        }
        rec.check(same, std::string("A1 fails for ") + model_kind_name(kind));
    }

    const SparseMatrix pair = rw_normalize(Graph::from_edges(2, {{0, 1}}, Tensor(2, 1), {}, 2));
    {
        const Tensor agg = ppr_propagate(pair, Tensor::from_rows({{10, 10}, {1, 2}}), 0.5, 1);
        const DirichletBelief before({1, 2}), after({agg(1, 0), agg(1, 1)});
        rec.check(pseudo_count_eu(after) < pseudo_count_eu(before), "A2: confident neighbour did not lower EU_PC");
    }
    {
        const Tensor agg = ppr_propagate(pair, Tensor::from_rows({{10, 1}, {1, 10}}), 0.5, 1);
        const DirichletBelief in0({10, 1}), in1({1, 10});
        for (std::size_t i = 0; i < 2; ++i) {
            const DirichletBelief out({agg(i, 0), agg(i, 1)});
            rec.check(least_confidence(out) > std::max(least_confidence(in0), least_confidence(in1)),
                      "A3: least confidence did not rise");
            rec.check(out.alpha0() == 0.5 * (in0.alpha0() + in1.alpha0()), "A3: total counts do not average");
        }
    }
    return rec.finish("A1 on 4 propagating models, A2, A3");
}

/// Finite-difference checks of every differentiable op and of the training
/// objective of every model kind on a 10-node graph.
inline VerifyResult verify_gradients(const VerifyOptions& o = {}, std::size_t points_per_op = 20) {
    detail::Recorder rec("gradient integrity");
    std::mt19937_64 rng(o.seed + 5);
    auto random_tensor = [&](std::size_t r, std::size_t c, double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        Tensor t(r, c);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
        return t;
    };
    const Tensor other = random_tensor(4, 3, 0.5, 2.0),
                 right = random_tensor(3, 2, -2.0, 2.0), rowv = random_tensor(1, 3, 0.5, 2.0);
    auto wsum = [](const Var& y) {
        std::mt19937_64 r(99);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        Tensor w(y.rows(), y.cols());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = u(r);
        return ad::sum(ad::mul(y, y.tape().constant(std::move(w))));
    };
    struct Case {
        const char* name;
        std::function<Var(const Var&)> f;
        double lo, hi;
    };
    const std::vector<Case> cases = {
        {"matmul", [&](const Var& x) { return wsum(ad::matmul(x, x.tape().constant(right))); }, -2, 2},
        {"transpose", [&](const Var& x) { return wsum(ad::transpose(x)); }, -2, 2},
        {"add", [&](const Var& x) { return wsum(x + x.tape().constant(rowv)); }, -2, 2},
        {"sub", [&](const Var& x) { return wsum(x.tape().constant(other) - x); }, -2, 2},
        {"mul", [&](const Var& x) { return wsum(x * x.tape().constant(other)); }, -2, 2},
        {"div", [&](const Var& x) { return wsum(x.tape().constant(other) / x); }, 0.5, 2},
        {"row_sum", [&](const Var& x) { return wsum(x.tape().constant(other) * ad::row_sum(x)); }, -2, 2},
        {"relu", [&](const Var& x) { return wsum(ad::relu(x)); }, -2, 2},
        {"elu", [&](const Var& x) { return wsum(ad::elu(x)); }, -2, 2},
        {"leaky_relu", [&](const Var& x) { return wsum(ad::leaky_relu(x)); }, -2, 2},
        {"exp", [&](const Var& x) { return wsum(ad::exp(x)); }, -2, 2},
        {"log", [&](const Var& x) { return wsum(ad::log(x)); }, 0.1, 3},
        {"softplus", [&](const Var& x) { return wsum(ad::softplus(x)); }, -5, 5},
        {"sqrt", [&](const Var& x) { return wsum(ad::sqrt(x)); }, 0.1, 3},
        {"reciprocal", [&](const Var& x) { return wsum(ad::reciprocal(x)); }, 0.3, 3},
        {"lgamma", [&](const Var& x) { return wsum(ad::lgamma(x)); }, 0.05, 40},
        {"digamma", [&](const Var& x) { return wsum(ad::digamma(x)); }, 0.05, 40},
        {"clamp_max", [&](const Var& x) { return wsum(ad::clamp_max(ad::exp(x), 3.0)); }, -2, 2},
        {"row_softmax", [&](const Var& x) { return wsum(ad::row_softmax(x)); }, -3, 3},
        {"row_log_softmax", [&](const Var& x) { return wsum(ad::row_log_softmax(x)); }, -3, 3},
        {"mean", [&](const Var& x) { return ad::mean(ad::square(x)); }, -2, 2},
        {"gather_rows", [&](const Var& x) { return wsum(ad::gather_rows(x, {3, 0, 0, 2, 1})); }, -2, 2},
        {"pick_columns", [&](const Var& x) { return wsum(ad::pick_columns(x, {2, 0, 1, 2})); }, -2, 2},
        {"segment_softmax", [&](const Var& x) { return wsum(ad::segment_softmax(ad::row_sum(ad::square(x)), {0, 1, 3, 4})); }, -2, 2},
        {"segment_sum", [&](const Var& x) { return wsum(ad::square(ad::segment_sum(x, {0, 2, 2, 4}))); }, -2, 2},
        {"concat_cols", [&](const Var& x) { return wsum(ad::concat_cols(ad::exp(x), ad::square(x))); }, -2, 2},
    };
    double worst = 0.0;
    for (const Case& c : cases) {
        for (std::size_t t = 0; t < points_per_op; ++t) {
            const double err = grad_check(c.f, random_tensor(4, 3, c.lo, c.hi));
            worst = std::max(worst, err);
            rec.check(err < 1e-4, std::string("op ") + c.name + " relative error " + detail::fmt(err));
        }
    }

    const std::size_t n = 10;
    std::vector<Graph::Edge> edges;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(i, std::uniform_int_distribution<std::size_t>(0, i - 1)(rng));
    edges.emplace_back(0, n - 1);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
    const Graph g = Graph::from_edges(n, edges, random_tensor(n, 3, -1.0, 1.0), labels, 3);
    const GraphContext ctx(g);
    const std::vector<std::size_t> nodes{0, 1, 2, 4, 7};
    std::normal_distribution<double> normal(0.0, 0.4);
    for (ModelKind kind : {ModelKind::cuq_gcn, ModelKind::cuq_ppr, ModelKind::cuq_gat, ModelKind::gpn,
                           ModelKind::lop_gpn, ModelKind::appnp}) {
        ModelSpec spec;
        spec.kind = kind;
        spec.n_features = 3;
        spec.n_classes = 3;
        spec.hidden = 5;
        spec.latent = 2;
        spec.flow_depth = 2;
        spec.ppr_steps = 4;
        spec.eps = 0.2;
        Model m = initialize_model(spec);
        attach_training_set(m, g, nodes);
        for (Parameter& p : m.params)
            if (p.trainable)
                for (double& v : p.value.data()) v += normal(rng);
        for (const Parameter& target : m.params) {
            if (!target.trainable) continue;
            const double err = grad_check(
                [&](const Var& x) {
                    BoundParameters p(x.tape(), m.params, false);
                    p.rebind(target.name, x);
                    return objective(x.tape(), m, p, ctx, nodes, 0.01).loss;
                },
                target.value);
            worst = std::max(worst, err);
            rec.check(err < 1e-4, std::string(model_kind_name(kind)) + " " + target.name + " relative error " + detail::fmt(err));
        }
    }
    return rec.finish("worst relative error " + detail::fmt(worst));
}

inline std::vector<VerifyResult> verify_all(const VerifyOptions& o = {}) {
    return {verify_measures(o), verify_uce(o), verify_llop(o), verify_ppr(o), verify_axioms(o), verify_gradients(o)};
}

}  // namespace cuq
