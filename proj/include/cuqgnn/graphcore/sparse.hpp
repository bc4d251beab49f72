#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cuqgnn/diffnum/tensor.hpp"

namespace cuq {

/// Compressed sparse row matrix of doubles with sorted column indices per row.
class SparseMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    SparseMatrix() = default;

    /// Builds from triplets; duplicates are summed.
    static SparseMatrix from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries) {
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
        SparseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.offsets_.assign(rows + 1, 0);
        for (const Entry& e : entries) {
            if (e.row >= rows || e.col >= cols) throw DimensionError("sparse entry out of range");
            if (!m.indices_.empty() && m.last_row_ == e.row && m.indices_.back() == e.col) {
                m.values_.back() += e.value;
                continue;
            }
            m.indices_.push_back(e.col);
            m.values_.push_back(e.value);
            m.offsets_[e.row + 1]++;
            m.last_row_ = e.row;
        }
        for (std::size_t r = 0; r < rows; ++r) m.offsets_[r + 1] += m.offsets_[r];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> offsets() const noexcept { return offsets_; }
    std::span<const std::size_t> row_indices(std::size_t r) const noexcept {
        return {indices_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
    }
    std::span<const double> row_values(std::size_t r) const noexcept {
        return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
    }

    /// M * h
    Tensor multiply(const Tensor& h) const {
        if (h.rows() != cols_) {
            throw DimensionError("sparse multiply: " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                 " times " + h.shape_string());
        }
        Tensor out(rows_, h.cols());
        for (std::size_t r = 0; r < rows_; ++r) {
            auto dst = out.row(r);
            for (std::size_t p = offsets_[r]; p < offsets_[r + 1]; ++p) {
                const double v = values_[p];
                const auto src = h.row(indices_[p]);
                for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += v * src[j];
            }
        }
        return out;
    }

    /// M^T * h
    Tensor multiply_transposed(const Tensor& h) const {
        if (h.rows() != rows_) {
            throw DimensionError("sparse transposed multiply: shape mismatch with " + h.shape_string());
        }
        Tensor out(cols_, h.cols());
        for (std::size_t r = 0; r < rows_; ++r) {
            const auto src = h.row(r);
            for (std::size_t p = offsets_[r]; p < offsets_[r + 1]; ++p) {
                const double v = values_[p];
                auto dst = out.row(indices_[p]);
                for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += v * src[j];
            }
        }
        return out;
    }

    double at(std::size_t r, std::size_t c) const {
        const auto idx = row_indices(r);
        const auto it = std::lower_bound(idx.begin(), idx.end(), c);
        if (it == idx.end() || *it != c) return 0.0;
        return row_values(r)[static_cast<std::size_t>(it - idx.begin())];
    }

    Tensor to_dense() const {
        Tensor d(rows_, cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t p = offsets_[r]; p < offsets_[r + 1]; ++p) d(r, indices_[p]) = values_[p];
        return d;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> indices_;
    std::vector<double> values_;
    std::size_t last_row_ = 0;
};

}  // namespace cuq
