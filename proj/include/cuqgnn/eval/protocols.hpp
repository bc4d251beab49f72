#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cuqgnn/eval/config.hpp"
#include "cuqgnn/eval/metrics.hpp"
#include "cuqgnn/trainer/train.hpp"

namespace cuq {

/// Runs fn(0..n-1) on up to worker_threads() threads. The first exception by
/// index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min(worker_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Node sets of one protocol repeat, kept for hygiene checks.
struct ProtocolAudit {
    std::vector<std::size_t> train, val, ood, id;
};

/// Per-split results of one model under one protocol.
struct EvalReport {
    ModelKind model = ModelKind::cuq_gcn;
    std::vector<Measure> measures;
    std::map<Measure, std::vector<ArcCurve>> arc;
    std::map<Measure, std::vector<double>> ood_auroc;
    std::vector<double> id_accuracy;
    std::vector<ProtocolAudit> audits;

    MeanSe auroc(Measure m) const { return mean_se(ood_auroc.at(m)); }
    MeanSe accuracy() const { return mean_se(id_accuracy); }
};

struct ArcSummary {
    std::vector<double> p, mean, se;
    bool truncated = false;
};

/// Pointwise mean and SE over splits, on the grid points every split reached.
inline ArcSummary summarize_arc(const std::vector<ArcCurve>& curves) {
    if (curves.empty()) throw ParameterError("summarize_arc: no curves");
    std::size_t len = curves.front().p.size();
    ArcSummary out;
    for (const auto& c : curves) {
        len = std::min(len, c.p.size());
        out.truncated = out.truncated || c.truncated;
    }
    out.truncated = out.truncated || std::any_of(curves.begin(), curves.end(), [&](const ArcCurve& c) { return c.p.size() != len; });
    for (std::size_t i = 0; i < len; ++i) {
        std::vector<double> xs;
        for (const auto& c : curves) xs.push_back(c.accuracy[i]);
        const MeanSe s = mean_se(xs);
        out.p.push_back(curves.front().p[i]);
        out.mean.push_back(s.mean);
        out.se.push_back(s.se);
    }
    return out;
}

enum class NoiseMode { replace, add };

inline const char* noise_mode_name(NoiseMode m) { return m == NoiseMode::replace ? "replace" : "add"; }

inline NoiseMode parse_noise_mode(const std::string& s) {
    if (s == "replace") return NoiseMode::replace;
    if (s == "add") return NoiseMode::add;
    throw ParameterError("unknown noise mode '" + s + "' (expected replace|add)");
}

namespace detail {

inline Graph prepared_graph(const Graph& g, const PipelineConfig& cfg) {
    return cfg.standardize ? g.with_features(standardize_columns(g.features())) : g;
}

inline ModelSpec spec_for(const PipelineConfig& cfg, const Graph& g) {
    ModelSpec s = cfg.model;
    s.n_features = g.n_features();
    s.n_classes = static_cast<std::size_t>(g.n_classes());
    return s;
}

inline TrainResult train_repeat(const PipelineConfig& cfg, const Graph& g, const Split& split, std::size_t repeat) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.train.seed + repeat;
    return train(spec_for(cfg, g), g, split, tc);
}

inline void assert_disjoint(const ProtocolAudit& a) {
    std::vector<std::size_t> seen = a.train;
    seen.insert(seen.end(), a.val.begin(), a.val.end());
    std::sort(seen.begin(), seen.end());
    for (std::size_t i : a.ood)
        if (std::binary_search(seen.begin(), seen.end(), i))
            throw std::logic_error("OOD node " + std::to_string(i) + " leaked into training or validation");
}

inline double test_accuracy(const NodeBeliefs& b, std::span<const std::size_t> nodes, std::span<const int> labels) {
    std::size_t hits = 0;
    for (std::size_t i : nodes) hits += b.predicted(i) == static_cast<std::size_t>(labels[i]) ? 1 : 0;
    return nodes.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(nodes.size());
}

struct RepeatOutcome {
    std::map<Measure, double> auroc;
    std::map<Measure, ArcCurve> arc;
    double id_acc = 0.0;
    ProtocolAudit audit;
};

inline void score_ood(const NodeBeliefs& b, const PipelineConfig& cfg, RepeatOutcome& out) {
    for (Measure m : b.supported_measures()) {
        const auto ood = b.uncertainties(out.audit.ood, m, cfg.mc_samples);
        const auto id = b.uncertainties(out.audit.id, m, cfg.mc_samples);
        out.auroc[m] = cuq::auroc(ood, id);
    }
}

inline EvalReport collect(ModelKind kind, std::vector<RepeatOutcome>& outcomes, std::vector<Measure> measures) {
    EvalReport r;
    r.model = kind;
    r.measures = std::move(measures);
    for (auto& o : outcomes) {
        for (auto& [m, v] : o.auroc) r.ood_auroc[m].push_back(v);
        for (auto& [m, c] : o.arc) r.arc[m].push_back(std::move(c));
        r.id_accuracy.push_back(o.id_acc);
        r.audits.push_back(std::move(o.audit));
    }
    return r;
}

inline std::vector<Measure> measures_for(ModelKind kind) {
    if (!is_second_order(kind)) return {Measure::TU};
    return {std::begin(kAllMeasures), std::end(kAllMeasures)};
}

}  // namespace detail

/// Trains one model per split repeat and records test accuracy and an ARC per supported measure.
inline EvalReport arc_evaluation(const Graph& raw, const PipelineConfig& cfg) {
    const Graph g = detail::prepared_graph(raw, cfg);
    const std::vector<Split> splits = make_splits(g, cfg.split);
    std::vector<detail::RepeatOutcome> outcomes(splits.size());
    const std::vector<double> grid = arc_grid();
    parallel_for(splits.size(), [&](std::size_t r) {
        const Split& s = splits[r];
        const TrainResult tr = detail::train_repeat(cfg, g, s, r);
        const NodeBeliefs b = predict(tr.model, g);
        detail::RepeatOutcome& o = outcomes[r];
        o.audit = {s.train, s.val, {}, s.test};
        o.id_acc = detail::test_accuracy(b, s.test, g.labels());
        std::vector<bool> correct;
        for (std::size_t i : s.test) correct.push_back(b.predicted(i) == static_cast<std::size_t>(g.label(i)));
        for (Measure m : b.supported_measures())
            o.arc[m] = arc_curve(b.uncertainties(s.test, m, cfg.mc_samples), correct, grid);
    });
    return detail::collect(cfg.model.kind, outcomes, detail::measures_for(cfg.model.kind));
}

/// Leave-out-class protocol. Held-out classes (default: the last one) vanish from
/// training and validation; their test nodes form the OOD set, the remaining test
/// nodes the ID set. Remaining labels are renumbered 0..K'-1 in their original order.
inline EvalReport ood_leave_out(const Graph& raw, std::vector<int> leave_out, const PipelineConfig& cfg) {
    const int k = raw.n_classes();
    if (leave_out.empty()) leave_out.push_back(k - 1);
    std::sort(leave_out.begin(), leave_out.end());
    leave_out.erase(std::unique(leave_out.begin(), leave_out.end()), leave_out.end());
    for (int c : leave_out)
        if (c < 0 || c >= k) throw ProtocolError("leave-out class " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
    const int remaining = k - static_cast<int>(leave_out.size());
    if (remaining < 2) throw ProtocolError("leave-out protocol needs at least 2 remaining classes, got " + std::to_string(remaining));

    std::vector<int> remap(static_cast<std::size_t>(k), kUnlabeled);
    for (int c = 0, next = 0; c < k; ++c)
        if (!std::binary_search(leave_out.begin(), leave_out.end(), c)) remap[static_cast<std::size_t>(c)] = next++;
    const Graph full = detail::prepared_graph(raw, cfg);
    std::vector<int> reduced_labels(full.n_nodes(), kUnlabeled);
    std::vector<bool> held_out(full.n_nodes(), false);
    for (std::size_t i = 0; i < full.n_nodes(); ++i) {
        if (full.label(i) == kUnlabeled) continue;
        reduced_labels[i] = remap[static_cast<std::size_t>(full.label(i))];
        held_out[i] = reduced_labels[i] == kUnlabeled;
    }
    const Graph reduced = full.with_labels(reduced_labels, remaining);

    const std::vector<Split> splits = make_splits(full, cfg.split);
    std::vector<detail::RepeatOutcome> outcomes(splits.size());
    for (std::size_t r = 0; r < splits.size(); ++r) {
        ProtocolAudit& a = outcomes[r].audit;
        for (std::size_t i : splits[r].train)
            if (!held_out[i]) a.train.push_back(i);
        for (std::size_t i : splits[r].val)
            if (!held_out[i]) a.val.push_back(i);
        for (std::size_t i : splits[r].test) (held_out[i] ? a.ood : a.id).push_back(i);
        if (a.ood.empty()) throw ProtocolError("split " + std::to_string(r) + " has no held-out test nodes");
        if (a.id.empty()) throw ProtocolError("split " + std::to_string(r) + " has no in-distribution test nodes");
        detail::assert_disjoint(a);
    }
    parallel_for(splits.size(), [&](std::size_t r) {
        detail::RepeatOutcome& o = outcomes[r];
        const Split s{o.audit.train, o.audit.val, o.audit.id};
        const TrainResult tr = detail::train_repeat(cfg, reduced, s, r);
        const NodeBeliefs b = predict(tr.model, reduced);
        o.id_acc = detail::test_accuracy(b, o.audit.id, reduced.labels());
        detail::score_ood(b, cfg, o);
    });
    return detail::collect(cfg.model.kind, outcomes, detail::measures_for(cfg.model.kind));
}

/// Test nodes whose features get perturbed in repeat `repeat`: a seeded sample of
/// round(fraction * |test|) nodes, returned sorted.
inline std::vector<std::size_t> perturbed_nodes(std::span<const std::size_t> test, double fraction, std::uint64_t seed,
                                                std::size_t repeat) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ProtocolError("noise fraction must lie in (0, 1)");
    const auto n_ood = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(test.size())));
    if (n_ood == 0) throw ProtocolError("noise fraction selects no test nodes");
    if (n_ood >= test.size()) throw ProtocolError("noise fraction perturbs every test node; the ID set would be empty");
    std::vector<std::size_t> pool(test.begin(), test.end());
    std::mt19937_64 rng(seed + repeat);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(n_ood);
    std::sort(pool.begin(), pool.end());
    return pool;
}

/// Replaces (or adds to) the features of `nodes` with unit Gaussian draws.
inline Graph perturb_features(const Graph& g, std::span<const std::size_t> nodes, NoiseMode mode, std::uint64_t seed) {
    Tensor x = g.features();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i : nodes)
        for (double& v : x.row(i)) v = (mode == NoiseMode::replace ? 0.0 : v) + normal(rng);
    return g.with_features(std::move(x));
}

/// Feature-noise protocol: the model trains on the clean graph; a seeded fraction
/// of test nodes is perturbed before prediction (OOD), the rest of the test set is ID.
inline EvalReport ood_feature_noise(const Graph& raw, double fraction, const PipelineConfig& cfg, std::uint64_t seed,
                                    NoiseMode mode = NoiseMode::replace) {
    const Graph g = detail::prepared_graph(raw, cfg);
    const std::vector<Split> splits = make_splits(g, cfg.split);
    std::vector<detail::RepeatOutcome> outcomes(splits.size());
    for (std::size_t r = 0; r < splits.size(); ++r) {
        ProtocolAudit& a = outcomes[r].audit;
        a.train = splits[r].train;
        a.val = splits[r].val;
        a.ood = perturbed_nodes(splits[r].test, fraction, seed, r);
        std::set_difference(splits[r].test.begin(), splits[r].test.end(), a.ood.begin(), a.ood.end(),
                            std::back_inserter(a.id));
        detail::assert_disjoint(a);
    }
    parallel_for(splits.size(), [&](std::size_t r) {
        detail::RepeatOutcome& o = outcomes[r];
        const TrainResult tr = detail::train_repeat(cfg, g, splits[r], r);
        const Graph noisy = perturb_features(g, o.audit.ood, mode, (seed + r) ^ 0x9e3779b97f4a7c15ULL);
        const NodeBeliefs b = predict(tr.model, noisy);
        o.id_acc = detail::test_accuracy(b, o.audit.id, g.labels());
        detail::score_ood(b, cfg, o);
    });
    return detail::collect(cfg.model.kind, outcomes, detail::measures_for(cfg.model.kind));
}

}  // namespace cuq
