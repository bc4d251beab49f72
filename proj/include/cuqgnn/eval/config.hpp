#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <thread>

#include "cuqgnn/models/model_spec.hpp"
#include "cuqgnn/trainer/splits.hpp"
#include "cuqgnn/trainer/train.hpp"

namespace cuq {

/// Flat `key = value` text. Blank lines and `#` comments are skipped; later keys win.
using FlatConfig = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ParameterError("setting '" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace detail

inline FlatConfig parse_flat_config(std::istream& is, const std::string& source = "config") {
    FlatConfig out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty key");
        out[key] = detail::trim(line.substr(eq + 1));
    }
    return out;
}

inline FlatConfig read_flat_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return parse_flat_config(in, path.string());
}

/// Everything one protocol run needs besides the graph.
struct PipelineConfig {
    ModelSpec model;
    TrainConfig train;
    SplitSpec split;
    bool standardize = true;
    std::size_t mc_samples = kDefaultMixtureSamples;

    /// Applies dotted keys: model.*, train.*, split.*, data.standardize, eval.mc_samples.
    void apply(const FlatConfig& cfg) {
        for (const auto& [key, value] : cfg) {
            const auto dot = key.find('.');
            const std::string group = key.substr(0, dot), leaf = dot == std::string::npos ? "" : key.substr(dot + 1);
            if (group == "model") model.set(leaf, value);
            else if (group == "train") train.set(leaf, value);
            else if (group == "split") set_split(leaf, value);
            else if (key == "data.standardize") standardize = detail::parse_bool(key, value);
            else if (key == "eval.mc_samples") mc_samples = detail::parse_integer<std::size_t>(key, value);
            else throw ParameterError("unknown setting '" + key + "'");
        }
    }

private:
    void set_split(const std::string& key, const std::string& value) {
        if (key == "train") split.train = detail::parse_double(key, value);
        else if (key == "val") split.val = detail::parse_double(key, value);
        else if (key == "test") split.test = detail::parse_double(key, value);
        else if (key == "stratified") split.stratified = detail::parse_bool(key, value);
        else if (key == "seed") split.seed = detail::parse_integer<std::uint64_t>(key, value);
        else if (key == "repeats") split.n_repeats = detail::parse_integer<std::size_t>(key, value);
        else throw ParameterError("unknown split setting '" + key + "'");
    }
};

/// Worker count: UQGNN_THREADS if set to a positive integer, else hardware concurrency.
inline std::size_t worker_threads() {
    if (const char* env = std::getenv("UQGNN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace cuq
