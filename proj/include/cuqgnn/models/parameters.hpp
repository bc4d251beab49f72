#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cuqgnn/diffnum/tape.hpp"

namespace cuq {

struct Parameter {
    std::string name;
    Tensor value;
    bool trainable = true;

    friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Named tensors in insertion order. Non-trainable entries hold fitted
/// statistics (class priors, certainty budget) that travel with checkpoints.
class ParameterStore {
public:
    Tensor& add(std::string name, Tensor value, bool trainable = true) {
        if (index_.contains(name)) throw ParameterError("duplicate parameter '" + name + "'");
        index_.emplace(name, params_.size());
        params_.push_back({std::move(name), std::move(value), trainable});
        return params_.back().value;
    }

    bool contains(const std::string& name) const { return index_.contains(name); }
    const Tensor& get(const std::string& name) const { return params_[position(name)].value; }
    Tensor& get(const std::string& name) { return params_[position(name)].value; }

    std::size_t size() const noexcept { return params_.size(); }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }
    Parameter& operator[](std::size_t i) { return params_[i]; }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }

    std::size_t n_trainable_values() const {
        std::size_t n = 0;
        for (const auto& p : params_)
            if (p.trainable) n += p.value.size();
        return n;
    }

    friend bool operator==(const ParameterStore& a, const ParameterStore& b) { return a.params_ == b.params_; }

private:
    std::size_t position(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) throw ParameterError("no parameter named '" + name + "'");
        return it->second;
    }

    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Parameters placed on a tape; trainable ones as gradient leaves.
class BoundParameters {
public:
    BoundParameters(Tape& tape, const ParameterStore& store, bool differentiable = true) {
        for (const Parameter& p : store) {
            vars_.emplace(p.name, differentiable && p.trainable ? tape.leaf(p.value) : tape.constant(p.value));
        }
    }

    const Var& operator[](const std::string& name) const {
        const auto it = vars_.find(name);
        if (it == vars_.end()) throw ParameterError("parameter '" + name + "' is not bound");
        return it->second;
    }

    /// Replaces a binding (used to differentiate with respect to a single tensor).
    void rebind(const std::string& name, Var v) { vars_.at(name) = std::move(v); }

private:
    std::unordered_map<std::string, Var> vars_;
};

}  // namespace cuq
