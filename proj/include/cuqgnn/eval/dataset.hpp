#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cuqgnn/eval/config.hpp"
#include "cuqgnn/graphcore/graph.hpp"
#include "cuqgnn/trainer/splits.hpp"

namespace cuq {

// Bundle layout:
//   features.csv  one row of floats per node, no header
//   edges.csv     src,dst (header optional)
//   labels.csv    node_id,label (header optional); nodes not listed are unlabeled
//   meta.txt      optional, `n_classes = K`; without it K = max label + 1
//   split.csv     optional, node_id,part with part in {train,val,test}

namespace detail {

class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path) : path_(path), in_(path) {
        if (!in_) throw ParseError("cannot open " + path.string());
    }

    /// Next non-blank row split on commas, or false at end of file.
    bool next(std::vector<std::string>& cells) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            cells.clear();
            std::size_t start = 0;
            for (;;) {
                const auto comma = line.find(',', start);
                cells.push_back(trim(line.substr(start, comma - start)));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            return true;
        }
        return false;
    }

    std::size_t line() const { return line_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(path_.filename().string() + ":" + std::to_string(line_) + ": " + what);
    }

    double real(const std::string& cell) const {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
            fail("non-numeric cell '" + cell + "'");
        return v;
    }

    std::int64_t integer(const std::string& cell) const {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
            fail("non-integer cell '" + cell + "'");
        return v;
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t line_ = 0;
};

inline bool looks_numeric(const std::string& cell) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    return ec == std::errc{} && ptr == cell.data() + cell.size() && !cell.empty();
}

/// A header is allowed on the first row only, and only if no cell parses as a number.
inline bool is_header(const CsvReader& r, const std::vector<std::string>& cells) {
    if (r.line() != 1) return false;
    for (const auto& c : cells)
        if (looks_numeric(c)) return false;
    return true;
}

inline std::size_t node_index(const CsvReader& r, const std::string& cell, std::size_t n) {
    const std::int64_t v = r.integer(cell);
    if (v < 0 || static_cast<std::uint64_t>(v) >= n)
        r.fail("node index " + cell + " out of range [0, " + std::to_string(n) + ")");
    return static_cast<std::size_t>(v);
}

inline void require_columns(const CsvReader& r, const std::vector<std::string>& cells, std::size_t n) {
    if (cells.size() != n)
        r.fail("expected " + std::to_string(n) + " columns, found " + std::to_string(cells.size()));
}

}  // namespace detail

inline Graph load_dataset(const std::filesystem::path& dir) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> cells;
    {
        detail::CsvReader r(dir / "features.csv");
        while (r.next(cells)) {
            if (!rows.empty() && cells.size() != rows.front().size())
                r.fail("ragged row: " + std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(rows.front().size()));
            std::vector<double> row;
            row.reserve(cells.size());
            for (const auto& c : cells) row.push_back(r.real(c));
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw ParseError("features.csv: no rows");
    }
    const std::size_t n = rows.size();
    Tensor x(n, rows.front().size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = rows[i][j];

    std::vector<Graph::Edge> edges;
    {
        detail::CsvReader r(dir / "edges.csv");
        while (r.next(cells)) {
            if (detail::is_header(r, cells)) continue;
            detail::require_columns(r, cells, 2);
            edges.emplace_back(detail::node_index(r, cells[0], n), detail::node_index(r, cells[1], n));
        }
    }

    std::optional<int> declared_k;
    if (std::filesystem::exists(dir / "meta.txt")) {
        const FlatConfig meta = read_flat_config(dir / "meta.txt");
        if (auto it = meta.find("n_classes"); it != meta.end())
            declared_k = detail::parse_integer<int>("n_classes", it->second);
    }
    std::vector<int> labels(n, kUnlabeled);
    int max_label = -1;
    {
        detail::CsvReader r(dir / "labels.csv");
        while (r.next(cells)) {
            if (detail::is_header(r, cells)) continue;
            detail::require_columns(r, cells, 2);
            const std::size_t i = detail::node_index(r, cells[0], n);
            const std::int64_t y = r.integer(cells[1]);
            if (y < 0 || (declared_k && y >= *declared_k))
                r.fail("label " + cells[1] + " outside [0, " + (declared_k ? std::to_string(*declared_k) : "inf") + ")");
            labels[i] = static_cast<int>(y);
            max_label = std::max(max_label, labels[i]);
        }
    }
    const int k = declared_k.value_or(max_label + 1);
    return Graph::from_edges(n, edges, std::move(x), std::move(labels), k);
}

/// Reads split.csv if present.
inline std::optional<Split> load_split(const std::filesystem::path& dir, std::size_t n_nodes) {
    if (!std::filesystem::exists(dir / "split.csv")) return std::nullopt;
    Split s;
    std::vector<std::string> cells;
    detail::CsvReader r(dir / "split.csv");
    while (r.next(cells)) {
        if (detail::is_header(r, cells)) continue;
        detail::require_columns(r, cells, 2);
        const std::size_t i = detail::node_index(r, cells[0], n_nodes);
        if (cells[1] == "train") s.train.push_back(i);
        else if (cells[1] == "val") s.val.push_back(i);
        else if (cells[1] == "test") s.test.push_back(i);
        else r.fail("unknown split part '" + cells[1] + "'");
    }
    for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
    return s;
}

/// Writes a bundle that load_dataset reads back to the same graph (features bit-exact).
inline void write_dataset(const Graph& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream os(dir / name);
        if (!os) throw ParseError("cannot write " + (dir / name).string());
        return os;
    };
    {
        std::ofstream os = open("features.csv");
        const Tensor& x = g.features();
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) os << (j ? "," : "") << detail::format_double(x(i, j));
            os << '\n';
        }
    }
    {
        std::ofstream os = open("edges.csv");
        os << "src,dst\n";
        for (auto [u, v] : g.edge_list()) os << u << ',' << v << '\n';
    }
    {
        std::ofstream os = open("labels.csv");
        os << "node_id,label\n";
        for (std::size_t i = 0; i < g.n_nodes(); ++i)
            if (g.label(i) != kUnlabeled) os << i << ',' << g.label(i) << '\n';
    }
    std::ofstream os = open("meta.txt");
    os << "n_classes = " << g.n_classes() << '\n';
}

}  // namespace cuq
