#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <system_error>

#include "cuqgnn/error.hpp"

namespace cuq {

enum class ModelKind { appnp, gpn, lop_gpn, cuq_ppr, cuq_gcn, cuq_gat, gkde };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::appnp,   ModelKind::gpn,     ModelKind::lop_gpn,
                                               ModelKind::cuq_ppr, ModelKind::cuq_gcn, ModelKind::cuq_gat,
                                               ModelKind::gkde};

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::appnp: return "appnp";
        case ModelKind::gpn: return "gpn";
        case ModelKind::lop_gpn: return "lop_gpn";
        case ModelKind::cuq_ppr: return "cuq_ppr";
        case ModelKind::cuq_gcn: return "cuq_gcn";
        case ModelKind::cuq_gat: return "cuq_gat";
        case ModelKind::gkde: return "gkde";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    for (ModelKind k : kAllModelKinds)
        if (s == model_kind_name(k)) return k;
    throw ParameterError("unknown model kind '" + s + "'");
}

/// Models whose output is a Dirichlet (or a Dirichlet mixture) per node.
inline bool is_second_order(ModelKind k) { return k != ModelKind::appnp; }
inline bool uses_ppr(ModelKind k) {
    return k == ModelKind::appnp || k == ModelKind::gpn || k == ModelKind::lop_gpn || k == ModelKind::cuq_ppr;
}
inline bool has_flow_head(ModelKind k) { return k != ModelKind::appnp && k != ModelKind::gkde; }

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size()) throw ParameterError(key + ": not a number: '" + v + "'");
    return out;
}

template <class Int>
Int parse_integer(const std::string& key, const std::string& v) {
    Int out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size()) throw ParameterError(key + ": not an integer: '" + v + "'");
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace detail

struct ModelSpec {
    ModelKind kind = ModelKind::cuq_gcn;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    std::size_t hidden = 64;
    std::size_t latent = 16;
    std::size_t flow_depth = 10;
    double eps = 0.1;               // PPR teleport probability
    std::size_t ppr_steps = 10;
    std::size_t conv_layers = 2;
    double certainty_budget = 0.0;  // 0: number of training nodes
    double max_log_density = 30.0;
    double gkde_sigma = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_features == 0) throw ParameterError("model: n_features must be >= 1");
        if (n_classes < 2) throw ParameterError("model: n_classes must be >= 2");
        if (hidden == 0 || latent == 0) throw ParameterError("model: hidden and latent sizes must be >= 1");
        if (uses_ppr(kind) && !(eps > 0.0 && eps <= 1.0)) throw ParameterError("model: eps must lie in (0, 1]");
        if ((kind == ModelKind::cuq_gcn || kind == ModelKind::cuq_gat) && conv_layers == 0) {
            throw ParameterError("model: conv_layers must be >= 1");
        }
        if (certainty_budget < 0.0) throw ParameterError("model: certainty_budget must be >= 0");
        if (kind == ModelKind::gkde && !(gkde_sigma > 0.0)) throw ParameterError("model: gkde_sigma must be > 0");
    }

    /// Sets one field from its key; unknown keys are a ParameterError.
    void set(const std::string& key, const std::string& value) {
        if (key == "kind") kind = parse_model_kind(value);
        else if (key == "n_features") n_features = detail::parse_integer<std::size_t>(key, value);
        else if (key == "n_classes") n_classes = detail::parse_integer<std::size_t>(key, value);
        else if (key == "hidden") hidden = detail::parse_integer<std::size_t>(key, value);
        else if (key == "latent") latent = detail::parse_integer<std::size_t>(key, value);
        else if (key == "flow_depth") flow_depth = detail::parse_integer<std::size_t>(key, value);
        else if (key == "eps") eps = detail::parse_double(key, value);
        else if (key == "ppr_steps") ppr_steps = detail::parse_integer<std::size_t>(key, value);
        else if (key == "conv_layers") conv_layers = detail::parse_integer<std::size_t>(key, value);
        else if (key == "certainty_budget") certainty_budget = detail::parse_double(key, value);
        else if (key == "max_log_density") max_log_density = detail::parse_double(key, value);
        else if (key == "gkde_sigma") gkde_sigma = detail::parse_double(key, value);
        else if (key == "seed") seed = detail::parse_integer<std::uint64_t>(key, value);
        else throw ParameterError("unknown model setting '" + key + "'");
    }

    /// All fields as key/value text, in a fixed order.
    std::map<std::string, std::string> to_map() const {
        return {{"kind", model_kind_name(kind)},
                {"n_features", std::to_string(n_features)},
                {"n_classes", std::to_string(n_classes)},
                {"hidden", std::to_string(hidden)},
                {"latent", std::to_string(latent)},
                {"flow_depth", std::to_string(flow_depth)},
                {"eps", detail::format_double(eps)},
                {"ppr_steps", std::to_string(ppr_steps)},
                {"conv_layers", std::to_string(conv_layers)},
                {"certainty_budget", detail::format_double(certainty_budget)},
                {"max_log_density", detail::format_double(max_log_density)},
                {"gkde_sigma", detail::format_double(gkde_sigma)},
                {"seed", std::to_string(seed)}};
    }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

}  // namespace cuq
