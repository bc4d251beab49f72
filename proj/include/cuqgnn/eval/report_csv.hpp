#pragma once

#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cuqgnn/eval/dataset.hpp"
#include "cuqgnn/eval/protocols.hpp"

namespace cuq {

// ARC CSV: p,<name>_mean,<name>_se,... with one row per grid point. Grid points a
// curve did not reach carry the marker "truncated" in both of its cells.
// OOD CSV: model,measure,auroc_mean,auroc_se,id_acc.

inline constexpr const char* kTruncatedMarker = "truncated";
inline constexpr const char* kOodCsvHeader = "model,measure,auroc_mean,auroc_se,id_acc";

inline void write_arc_csv(std::ostream& os, const std::vector<std::pair<std::string, ArcSummary>>& columns) {
    os << 'p';
    for (const auto& [name, _] : columns) os << ',' << name << "_mean," << name << "_se";
    os << '\n';
    const std::vector<double> grid = arc_grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        os << detail::format_double(grid[i]);
        for (const auto& [_, s] : columns) {
            if (i < s.p.size()) os << ',' << detail::format_double(s.mean[i]) << ',' << detail::format_double(s.se[i]);
            else os << ',' << kTruncatedMarker << ',' << kTruncatedMarker;
        }
        os << '\n';
    }
}

inline void write_ood_csv(std::ostream& os, const std::vector<EvalReport>& reports) {
    os << kOodCsvHeader << '\n';
    for (const EvalReport& r : reports) {
        const MeanSe acc = r.accuracy();
        for (Measure m : r.measures) {
            const MeanSe a = r.auroc(m);
            os << model_kind_name(r.model) << ',' << measure_name(m) << ',' << detail::format_double(a.mean) << ','
               << detail::format_double(a.se) << ',' << detail::format_double(acc.mean) << '\n';
        }
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) return cells;
        start = comma + 1;
    }
}

inline double csv_number(const std::string& cell, std::size_t lineno) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
        throw ParseError("line " + std::to_string(lineno) + ": non-numeric cell '" + cell + "'");
    return v;
}

}  // namespace detail

/// Parsed ARC table; truncated cells read back as NaN.
struct ArcTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Validates an ARC CSV: header shape, 100 rows on the grid, numeric or marker cells, means in [0, 1].
inline ArcTable read_arc_csv(std::istream& is) {
    ArcTable t;
    std::string line;
    if (!std::getline(is, line)) throw ParseError("ARC CSV is empty");
    t.header = detail::split_csv_line(line);
    if (t.header.empty() || t.header[0] != "p" || t.header.size() % 2 != 1)
        throw ParseError("ARC CSV header must be p followed by mean/se pairs");
    const std::vector<double> grid = arc_grid();
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != t.header.size()) throw ParseError("line " + std::to_string(lineno) + ": wrong column count");
        std::vector<double> row;
        row.push_back(detail::csv_number(cells[0], lineno));
        if (t.rows.size() >= grid.size() || row[0] != grid[t.rows.size()])
            throw ParseError("line " + std::to_string(lineno) + ": p off the rejection grid");
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c] == kTruncatedMarker) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            const double v = detail::csv_number(cells[c], lineno);
            if (c % 2 == 1 && (v < 0.0 || v > 1.0)) throw ParseError("line " + std::to_string(lineno) + ": accuracy outside [0, 1]");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.rows.size() != grid.size()) throw ParseError("ARC CSV must have " + std::to_string(grid.size()) + " rows");
    return t;
}

struct OodRow {
    ModelKind model;
    Measure measure;
    double auroc_mean, auroc_se, id_acc;
};

/// Validates an OOD CSV: exact header, known model and measure names, AUROC and accuracy in [0, 1].
inline std::vector<OodRow> read_ood_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kOodCsvHeader) throw ParseError("OOD CSV header must be " + std::string(kOodCsvHeader));
    std::vector<OodRow> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 5) throw ParseError("line " + std::to_string(lineno) + ": expected 5 columns");
        OodRow r{};
        try {
            r.model = parse_model_kind(cells[0]);
            r.measure = parse_measure(cells[1]);
        } catch (const ParameterError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        r.auroc_mean = detail::csv_number(cells[2], lineno);
        r.auroc_se = detail::csv_number(cells[3], lineno);
        r.id_acc = detail::csv_number(cells[4], lineno);
        if (r.auroc_mean < 0.0 || r.auroc_mean > 1.0 || r.id_acc < 0.0 || r.id_acc > 1.0 || r.auroc_se < 0.0)
            throw ParseError("line " + std::to_string(lineno) + ": value out of range");
        out.push_back(r);
    }
    return out;
}

}  // namespace cuq
