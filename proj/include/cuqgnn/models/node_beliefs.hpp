#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cuqgnn/diffnum/tensor.hpp"
#include "cuqgnn/models/model_spec.hpp"
#include "cuqgnn/uqcore/mixture.hpp"

namespace cuq {

inline constexpr std::size_t kDefaultMixtureSamples = 10000;

/// Per-node predictions of one model. Exactly one representation is filled:
/// Dirichlet beliefs, Dirichlet mixtures (lop_gpn), or class probabilities (appnp).
class NodeBeliefs {
public:
    static NodeBeliefs from_beliefs(ModelKind kind, std::vector<DirichletBelief> b) {
        NodeBeliefs out(kind);
        out.beliefs_ = std::move(b);
        return out;
    }
    static NodeBeliefs from_alpha(ModelKind kind, const Tensor& alpha) {
        std::vector<DirichletBelief> b;
        b.reserve(alpha.rows());
        for (std::size_t i = 0; i < alpha.rows(); ++i) {
            b.emplace_back(std::vector<double>(alpha.row(i).begin(), alpha.row(i).end()));
        }
        return from_beliefs(kind, std::move(b));
    }
    static NodeBeliefs from_mixtures(ModelKind kind, std::vector<DirichletMixture> m) {
        NodeBeliefs out(kind);
        out.mixtures_ = std::move(m);
        return out;
    }
    static NodeBeliefs from_probabilities(ModelKind kind, Tensor p) {
        NodeBeliefs out(kind);
        out.probabilities_ = std::move(p);
        return out;
    }

    ModelKind kind() const noexcept { return kind_; }
    bool is_mixture() const noexcept { return !mixtures_.empty(); }
    bool is_first_order() const noexcept { return beliefs_.empty() && mixtures_.empty(); }

    std::size_t size() const noexcept {
        if (!beliefs_.empty()) return beliefs_.size();
        if (!mixtures_.empty()) return mixtures_.size();
        return probabilities_.rows();
    }

    const std::vector<DirichletBelief>& beliefs() const noexcept { return beliefs_; }
    const std::vector<DirichletMixture>& mixtures() const noexcept { return mixtures_; }
    const Tensor& probabilities() const noexcept { return probabilities_; }

    /// Expected class distribution of node i.
    std::vector<double> mean(std::size_t i) const {
        if (!beliefs_.empty()) return mean_theta(beliefs_.at(i));
        if (!mixtures_.empty()) return mixtures_.at(i).mean();
        const auto r = probabilities_.row(i);
        return {r.begin(), r.end()};
    }

    std::size_t predicted(std::size_t i) const { return predicted_class(mean(i)); }

    /// Uncertainty of node i under `m`. Mixture EU_SO is sampled with `n_mc`
    /// draws from a per-node seed; first-order models support TU only.
    double uncertainty(std::size_t i, Measure m, std::size_t n_mc = kDefaultMixtureSamples,
                       std::uint64_t seed = 0) const {
        if (!beliefs_.empty()) return measure(beliefs_.at(i), m);
        if (!mixtures_.empty()) return measure(mixtures_.at(i), m, n_mc, seed + i);
        if (m != Measure::TU) {
            throw UnsupportedMeasureError(std::string(model_kind_name(kind_)) +
                                          " produces first-order predictions; only tu is defined, not " +
                                          measure_name(m));
        }
        return shannon_entropy(probabilities_.row(i));
    }

    std::vector<double> uncertainties(std::span<const std::size_t> nodes, Measure m,
                                      std::size_t n_mc = kDefaultMixtureSamples, std::uint64_t seed = 0) const {
        std::vector<double> out;
        out.reserve(nodes.size());
        for (std::size_t i : nodes) out.push_back(uncertainty(i, m, n_mc, seed));
        return out;
    }

    /// Measures this model can report.
    std::vector<Measure> supported_measures() const {
        if (is_first_order()) return {Measure::TU};
        return {std::begin(kAllMeasures), std::end(kAllMeasures)};
    }

private:
    explicit NodeBeliefs(ModelKind kind) : kind_(kind) {}

    ModelKind kind_;
    std::vector<DirichletBelief> beliefs_;
    std::vector<DirichletMixture> mixtures_;
    Tensor probabilities_;
};

}  // namespace cuq
