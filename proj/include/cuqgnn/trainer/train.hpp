#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cuqgnn/models/model.hpp"
#include "cuqgnn/trainer/adam.hpp"
#include "cuqgnn/trainer/losses.hpp"
#include "cuqgnn/trainer/splits.hpp"

namespace cuq {

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::size_t max_epochs = 1000;
    std::size_t patience = 50;
    double entropy_weight = 1e-4;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lr > 0.0)) throw ParameterError("train: lr must be > 0");
        if (weight_decay < 0.0 || entropy_weight < 0.0) throw ParameterError("train: weights must be >= 0");
        if (patience == 0) throw ParameterError("train: patience must be >= 1");
        if (max_epochs > 0 && patience > max_epochs) throw ParameterError("train: patience exceeds max_epochs");
    }

    void set(const std::string& key, const std::string& value) {
        if (key == "lr") lr = detail::parse_double(key, value);
        else if (key == "weight_decay") weight_decay = detail::parse_double(key, value);
        else if (key == "max_epochs") max_epochs = detail::parse_integer<std::size_t>(key, value);
        else if (key == "patience") patience = detail::parse_integer<std::size_t>(key, value);
        else if (key == "entropy_weight") entropy_weight = detail::parse_double(key, value);
        else if (key == "seed") seed = detail::parse_integer<std::uint64_t>(key, value);
        else throw ParameterError("unknown training setting '" + key + "'");
    }
};

struct HistoryRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double val_uce = 0.0;
    std::size_t saturation = 0;
};

struct TrainResult {
    Model model;
    std::vector<HistoryRow> history;
    std::size_t best_epoch = 0;
    double best_val_acc = 0.0;
};

struct Objective {
    Var loss;      // scalar: mean loss + entropy term
    Var per_node;  // m x 1 loss of every node in `nodes`
    ForwardPass pass;
};

/// Training objective on `nodes`: UCE (or cross-entropy for appnp) plus the
/// entropy regularizer scaled by `entropy_weight`.
inline Objective objective(Tape& tape, const Model& m, const BoundParameters& p, const GraphContext& ctx,
                           std::span<const std::size_t> nodes, double entropy_weight) {
    const ModelSpec& s = m.spec;
    const std::span<const int> labels = ctx.graph->labels();
    Objective o;
    o.pass = forward(tape, m, p, ctx);
    Var reg;
    switch (s.kind) {
        case ModelKind::appnp: o.per_node = cross_entropy_per_node(o.pass.log_probs, nodes, labels); break;
        case ModelKind::lop_gpn:
            o.per_node = mixture_uce_per_node(o.pass.alpha_ft, ctx.rw, s.eps, s.ppr_steps, nodes, labels);
            reg = mixture_entropy_regularizer(o.pass.alpha_ft, ctx.rw, s.eps, s.ppr_steps, nodes);
            break;
        default:
            o.per_node = uce_per_node(o.pass.alpha, nodes, labels);
            reg = entropy_regularizer(o.pass.alpha, nodes);
            break;
    }
    o.loss = ad::mean(o.per_node);
    if (reg.valid() && entropy_weight > 0.0) o.loss = o.loss + ad::scale(reg, entropy_weight);
    return o;
}

namespace detail {

/// Class scores per node from a forward pass (any positive monotone proxy of the mean).
inline Tensor class_scores(const Model& m, const GraphContext& ctx, const ForwardPass& f) {
    switch (m.spec.kind) {
        case ModelKind::appnp: return f.log_probs.value();
        case ModelKind::lop_gpn: {
            Tensor mean = f.alpha_ft.value();
            for (std::size_t i = 0; i < mean.rows(); ++i) {
                double a0 = 0.0;
                for (double v : mean.row(i)) a0 += v;
                for (double& v : mean.row(i)) v /= a0;
            }
            return ppr_propagate(ctx.rw, mean, m.spec.eps, m.spec.ppr_steps);
        }
        default: return f.alpha.value();
    }
}

inline double accuracy(const Tensor& scores, std::span<const std::size_t> nodes, std::span<const int> labels) {
    if (nodes.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i : nodes) hits += predicted_class(scores.row(i)) == static_cast<std::size_t>(labels[i]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

inline std::string divergence_report(const Model& m, const Tensor* per_node, std::span<const std::size_t> nodes,
                                     std::size_t epoch, const std::string& cause = {}) {
    std::ostringstream os;
    os << "non-finite training loss at epoch " << epoch;
    if (!cause.empty()) os << " (" << cause << ')';
    if (per_node != nullptr) {
        for (std::size_t r = 0; r < per_node->rows(); ++r) {
            if (!std::isfinite((*per_node)[r])) {
                os << "; first offending node " << nodes[r];
                break;
            }
        }
    }
    os << "; parameter norms:";
    for (const Parameter& p : m.params) {
        double sq = 0.0;
        for (double v : p.value.data()) sq += v * v;
        os << ' ' << p.name << '=' << std::sqrt(sq);
    }
    return os.str();
}

}  // namespace detail

/// Full-batch Adam training with early stopping on validation accuracy
/// (validation UCE breaks ties). The returned model carries the best parameters seen.
inline TrainResult train(Model model, const Graph& g, const Split& split, const TrainConfig& cfg) {
    cfg.validate();
    attach_training_set(model, g, split.train);
    TrainResult out;
    if (model.spec.kind == ModelKind::gkde) {
        out.model = std::move(model);
        return out;
    }
    const GraphContext ctx(g);
    const std::span<const int> labels = g.labels();
    Adam opt(cfg.lr);
    ParameterStore best = model.params;
    double best_acc = -1.0, best_uce = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Tape tape;
        const BoundParameters p(tape, model.params);
        std::optional<Objective> maybe;
        try {
            maybe.emplace(objective(tape, model, p, ctx, split.train, cfg.entropy_weight));
        } catch (const DomainError& e) {
            throw TrainingError(detail::divergence_report(model, nullptr, split.train, epoch, e.what()));
        }
        const Objective& o = *maybe;
        const double loss = o.loss.value().item();
        if (!std::isfinite(loss))
            throw TrainingError(detail::divergence_report(model, &o.per_node.value(), split.train, epoch));

        HistoryRow row{epoch, loss, 0.0, 0.0, o.pass.saturated};
        if (!split.val.empty()) {
            row.val_acc = detail::accuracy(detail::class_scores(model, ctx, o.pass), split.val, labels);
            Tape val_tape;
            const BoundParameters vp(val_tape, model.params, false);
            row.val_uce = ad::mean(objective(val_tape, model, vp, ctx, split.val, 0.0).per_node).value().item();
        }
        out.history.push_back(row);

        if (!split.val.empty()) {
            if (row.val_acc > best_acc || (row.val_acc == best_acc && row.val_uce < best_uce)) {
                best_acc = row.val_acc;
                best_uce = row.val_uce;
                best = model.params;
                out.best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }

        tape.backward(o.loss);
        for (Parameter& param : model.params) {
            if (!param.trainable) continue;
            const double decay = is_flow_parameter(param.name) ? 0.0 : cfg.weight_decay;
            opt.step(param.name, param.value, tape.grad(p[param.name]), decay);
        }
    }
    if (!split.val.empty() && !out.history.empty()) {
        model.params = std::move(best);
        out.best_val_acc = best_acc;
    }
    out.model = std::move(model);
    return out;
}

/// Initializes from `spec` with the configured seed, then trains.
inline TrainResult train(ModelSpec spec, const Graph& g, const Split& split, const TrainConfig& cfg) {
    spec.seed = cfg.seed;
    return train(initialize_model(spec), g, split, cfg);
}

inline void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& rows) {
    os << "epoch,train_loss,val_acc,val_uce,saturation\n";
    for (const HistoryRow& r : rows) {
        os << r.epoch << ',' << detail::format_double(r.train_loss) << ',' << detail::format_double(r.val_acc) << ','
           << detail::format_double(r.val_uce) << ',' << r.saturation << '\n';
    }
}

}  // namespace cuq
