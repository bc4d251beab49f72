#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cuqgnn/diffnum/special.hpp"
#include "cuqgnn/diffnum/tensor.hpp"

// Define-by-run reverse-mode differentiation over dense matrices.
//
// A Tape owns every intermediate value. Nodes are appended in evaluation
// order, which is a topological order, so backward() simply walks the node
// list from the root down to zero and visits each node once.

namespace cuq {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Tensor& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    std::size_t id() const noexcept { return id_; }
    Tape& tape() const noexcept { return *tape_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    /// Receives the gradient of the node's output; adds into the parents.
    using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = true) {
        nodes_.push_back(Node{std::move(value), {}, {}, requires_grad});
        return Var(this, nodes_.size() - 1);
    }

    Var constant(Tensor value) { return leaf(std::move(value), false); }

    /// Records an op result. The backward closure is dropped when no parent needs a gradient.
    Var record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
        bool needs = false;
        for (const Var& p : parents) {
            if (p.tape_ != this) throw Error("Var belongs to a different tape");
            needs = needs || nodes_[p.id_].requires_grad;
        }
        nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, needs});
        return Var(this, nodes_.size() - 1);
    }

    const Tensor& value(const Var& v) const { return nodes_[v.id_].value; }
    bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }

    /// Gradient accumulated by the last backward pass; zeros if the node was not reached.
    const Tensor& grad(const Var& v) const {
        const Node& n = nodes_[v.id_];
        if (n.grad.empty() && !n.value.empty()) {
            n.grad = Tensor(n.value.rows(), n.value.cols());
        }
        return n.grad;
    }

    /// Adds `g` into the gradient of `v` if `v` participates in differentiation.
    void accumulate(const Var& v, const Tensor& g) {
        Node& n = nodes_[v.id_];
        if (!n.requires_grad) return;
        if (n.grad.empty()) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    void accumulate(const Var& v, Tensor&& g) {
        Node& n = nodes_[v.id_];
        if (!n.requires_grad) return;
        if (n.grad.empty()) {
            n.grad = std::move(g);
        } else {
            n.grad += g;
        }
    }

    /// Reverse sweep from a scalar root.
    void backward(const Var& root) {
        if (value(root).size() != 1) {
            throw DimensionError("backward root must be scalar, got " + value(root).shape_string());
        }
        for (Node& n : nodes_) n.grad = Tensor();
        nodes_[root.id_].grad = Tensor::scalar(1.0);
        for (std::size_t i = root.id_ + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward || n.grad.empty()) continue;
            const Tensor g = n.grad;
            n.backward(*this, g);
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        mutable Tensor grad;
        Backward backward;
        bool requires_grad = false;
    };
    std::deque<Node> nodes_;  // stable addresses: value() references survive later records
};

inline const Tensor& Var::value() const { return tape_->value(*this); }
inline const Tensor& Var::grad() const { return tape_->grad(*this); }

namespace ad {

namespace detail {

inline void require_same_tape(const Var& a, const Var& b) {
    if (&a.tape() != &b.tape()) throw Error("operands live on different tapes");
}

// Broadcast target of two 2-D shapes: each dim must match or be 1.
inline std::array<std::size_t, 2> broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
    auto dim = [&](std::size_t x, std::size_t y) -> std::size_t {
        if (x == y) return x;
        if (x == 1) return y;
        if (y == 1) return x;
        throw DimensionError(std::string(op) + ": cannot broadcast " + a.shape_string() + " with " +
                             b.shape_string());
    };
    return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols())};
}

// Sums a broadcast gradient back down to `target` shape.
inline Tensor reduce_to(const Tensor& g, std::size_t rows, std::size_t cols) {
    if (g.rows() == rows && g.cols() == cols) return g;
    Tensor out(rows, cols);
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) out(rows == 1 ? 0 : i, cols == 1 ? 0 : j) += g(i, j);
    return out;
}

template <class F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, std::array<std::size_t, 2> shape, F f) {
    Tensor out(shape[0], shape[1]);
    const bool ar = a.rows() == 1, ac = a.cols() == 1, br = b.rows() == 1, bc = b.cols() == 1;
    for (std::size_t i = 0; i < shape[0]; ++i)
        for (std::size_t j = 0; j < shape[1]; ++j)
            out(i, j) = f(a(ar ? 0 : i, ac ? 0 : j), b(br ? 0 : i, bc ? 0 : j));
    return out;
}

// Elementwise op; df is the derivative as a function of the input.
template <class F, class DF>
Var unary(const Var& x, F f, DF df) {
    const Tensor& xv = x.value();
    Tensor out(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    return x.tape().record(std::move(out), {x}, [x, df](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        Tensor gx(xv.rows(), xv.cols());
        for (std::size_t i = 0; i < xv.size(); ++i) gx[i] = g[i] * df(xv[i]);
        t.accumulate(x, std::move(gx));
    });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

inline Var matmul(const Var& a, const Var& b) {
    detail::require_same_tape(a, b);
    Tensor out = cuq::matmul(a.value(), b.value());
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) t.accumulate(a, cuq::matmul(g, t.value(b).transposed()));
        if (t.requires_grad(b)) t.accumulate(b, cuq::matmul(t.value(a).transposed(), g));
    });
}

inline Var transpose(const Var& x) {
    return x.tape().record(x.value().transposed(), {x},
                           [x](Tape& t, const Tensor& g) { t.accumulate(x, g.transposed()); });
}

// ---------------------------------------------------------------------------
// Broadcasting arithmetic (2-D, each dim equal or 1)

inline Var add(const Var& a, const Var& b) {
    detail::require_same_tape(a, b);
    const auto shape = detail::broadcast_shape(a.value(), b.value(), "add");
    Tensor out = detail::broadcast_apply(a.value(), b.value(), shape, [](double x, double y) { return x + y; });
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, detail::reduce_to(g, t.value(a).rows(), t.value(a).cols()));
        t.accumulate(b, detail::reduce_to(g, t.value(b).rows(), t.value(b).cols()));
    });
}

inline Var sub(const Var& a, const Var& b) {
    detail::require_same_tape(a, b);
    const auto shape = detail::broadcast_shape(a.value(), b.value(), "sub");
    Tensor out = detail::broadcast_apply(a.value(), b.value(), shape, [](double x, double y) { return x - y; });
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, detail::reduce_to(g, t.value(a).rows(), t.value(a).cols()));
        if (t.requires_grad(b)) {
            Tensor gb = detail::reduce_to(g, t.value(b).rows(), t.value(b).cols());
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = -gb[i];
            t.accumulate(b, std::move(gb));
        }
    });
}

inline Var mul(const Var& a, const Var& b) {
    detail::require_same_tape(a, b);
    const auto shape = detail::broadcast_shape(a.value(), b.value(), "mul");
    Tensor out = detail::broadcast_apply(a.value(), b.value(), shape, [](double x, double y) { return x * y; });
    return a.tape().record(std::move(out), {a, b}, [a, b, shape](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        if (t.requires_grad(a)) {
            Tensor ga = detail::broadcast_apply(g, bv, shape, [](double x, double y) { return x * y; });
            t.accumulate(a, detail::reduce_to(ga, av.rows(), av.cols()));
        }
        if (t.requires_grad(b)) {
            Tensor gb = detail::broadcast_apply(g, av, shape, [](double x, double y) { return x * y; });
            t.accumulate(b, detail::reduce_to(gb, bv.rows(), bv.cols()));
        }
    });
}

inline Var div(const Var& a, const Var& b) {
    detail::require_same_tape(a, b);
    const auto shape = detail::broadcast_shape(a.value(), b.value(), "div");
    Tensor out = detail::broadcast_apply(a.value(), b.value(), shape, [](double x, double y) { return x / y; });
    return a.tape().record(std::move(out), {a, b}, [a, b, shape](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        if (t.requires_grad(a)) {
            Tensor ga = detail::broadcast_apply(g, bv, shape, [](double x, double y) { return x / y; });
            t.accumulate(a, detail::reduce_to(ga, av.rows(), av.cols()));
        }
        if (t.requires_grad(b)) {
            // d(a/b)/db = -a / b^2
            Tensor q = detail::broadcast_apply(av, bv, shape, [](double x, double y) { return -x / (y * y); });
            Tensor gb = detail::broadcast_apply(g, q, shape, [](double x, double y) { return x * y; });
            t.accumulate(b, detail::reduce_to(gb, bv.rows(), bv.cols()));
        }
    });
}

inline Var scale(const Var& x, double s) {
    const Tensor& xv = x.value();
    Tensor out(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = s * xv[i];
    return x.tape().record(std::move(out), {x}, [x, s](Tape& t, const Tensor& g) {
        Tensor gx(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] = s * g[i];
        t.accumulate(x, std::move(gx));
    });
}

inline Var add_scalar(const Var& x, double s) {
    const Tensor& xv = x.value();
    Tensor out(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + s;
    return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) { t.accumulate(x, g); });
}

inline Var neg(const Var& x) { return scale(x, -1.0); }

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& x) { return neg(x); }
inline Var operator*(double s, const Var& x) { return scale(x, s); }
inline Var operator+(const Var& x, double s) { return add_scalar(x, s); }

// ---------------------------------------------------------------------------
// Elementwise nonlinearities

inline constexpr double kLeakyReluSlope = 0.2;

inline Var relu(const Var& x) {
    return detail::unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

/// ELU with alpha = 1; derivative at 0 taken from the right (1).
inline Var elu(const Var& x) {
    return detail::unary(
        x, [](double v) { return v >= 0.0 ? v : std::expm1(v); },
        [](double v) { return v >= 0.0 ? 1.0 : std::exp(v); });
}

inline Var leaky_relu(const Var& x, double slope = kLeakyReluSlope) {
    return detail::unary(
        x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

inline Var exp(const Var& x) {
    return detail::unary(
        x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

inline Var log(const Var& x) {
    for (double v : x.value().data()) {
        if (!(v > 0.0)) throw DomainError("log of non-positive entry " + std::to_string(v));
    }
    return detail::unary(
        x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

inline double softplus_value(double v) {
    // log(1 + e^v) without overflow
    return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

inline double sigmoid_value(double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

inline Var softplus(const Var& x) { return detail::unary(x, softplus_value, sigmoid_value); }

inline Var sqrt(const Var& x) {
    for (double v : x.value().data()) {
        if (v < 0.0) throw DomainError("sqrt of negative entry " + std::to_string(v));
    }
    return detail::unary(
        x, [](double v) { return std::sqrt(v); }, [](double v) { return 0.5 / std::sqrt(v); });
}

inline Var square(const Var& x) {
    return detail::unary(
        x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

inline Var reciprocal(const Var& x) {
    return detail::unary(
        x, [](double v) { return 1.0 / v; }, [](double v) { return -1.0 / (v * v); });
}

inline Var lgamma(const Var& x) {
    return detail::unary(
        x, [](double v) { return special::lgamma(v); }, [](double v) { return special::digamma(v); });
}

inline Var digamma(const Var& x) {
    return detail::unary(
        x, [](double v) { return special::digamma(v); }, [](double v) { return special::trigamma(v); });
}

/// min(x, ceiling); entries at or above the ceiling pass no gradient.
/// `saturated` (if given) is incremented by the number of clamped entries.
inline Var clamp_max(const Var& x, double ceiling, std::size_t* saturated = nullptr) {
    if (saturated) {
        for (double v : x.value().data()) *saturated += v >= ceiling ? 1 : 0;
    }
    return detail::unary(
        x, [ceiling](double v) { return v < ceiling ? v : ceiling; },
        [ceiling](double v) { return v < ceiling ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Reductions

inline Var sum(const Var& x) {
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    return x.tape().record(Tensor::scalar(s), {x}, [x](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        t.accumulate(x, Tensor(xv.rows(), xv.cols(), g[0]));
    });
}

inline Var mean(const Var& x) {
    const double n = static_cast<double>(x.value().size());
    return scale(sum(x), 1.0 / n);
}

/// m x n -> m x 1
inline Var row_sum(const Var& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.rows(), 1);
    for (std::size_t i = 0; i < xv.rows(); ++i)
        for (double v : xv.row(i)) out(i, 0) += v;
    return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        Tensor gx(xv.rows(), xv.cols());
        for (std::size_t i = 0; i < xv.rows(); ++i)
            for (std::size_t j = 0; j < xv.cols(); ++j) gx(i, j) = g(i, 0);
        t.accumulate(x, std::move(gx));
    });
}

// ---------------------------------------------------------------------------
// Softmax

namespace detail {

inline Tensor row_softmax_value(const Tensor& x) {
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) z += out(i, j) = std::exp(r[j] - m);
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= z;
    }
    return out;
}

}  // namespace detail

/// Softmax of each row, max-subtracted.
inline Var row_softmax(const Var& x) {
    Tensor out = detail::row_softmax_value(x.value());
    Tensor y = out;
    return x.tape().record(std::move(out), {x}, [x, y = std::move(y)](Tape& t, const Tensor& g) {
        Tensor gx(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j) gx(i, j) = y(i, j) * (g(i, j) - dot);
        }
        t.accumulate(x, std::move(gx));
    });
}

inline Var row_log_softmax(const Var& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        const auto r = xv.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (double v : r) z += std::exp(v - m);
        const double lse = m + std::log(z);
        for (std::size_t j = 0; j < xv.cols(); ++j) out(i, j) = r[j] - lse;
    }
    Tensor y = out;
    return x.tape().record(std::move(out), {x}, [x, y = std::move(y)](Tape& t, const Tensor& g) {
        Tensor gx(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) gs += g(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j) gx(i, j) = g(i, j) - std::exp(y(i, j)) * gs;
        }
        t.accumulate(x, std::move(gx));
    });
}

// ---------------------------------------------------------------------------
// Indexing and segment ops (used by masked losses and attention)

/// out[r] = x[index[r]]; backward scatters.
inline Var gather_rows(const Var& x, std::vector<std::size_t> index) {
    const Tensor& xv = x.value();
    Tensor out(index.size(), xv.cols());
    for (std::size_t r = 0; r < index.size(); ++r) {
        if (index[r] >= xv.rows()) throw DimensionError("gather_rows index out of range");
        std::copy(xv.row(index[r]).begin(), xv.row(index[r]).end(), out.row(r).begin());
    }
    return x.tape().record(std::move(out), {x}, [x, index = std::move(index)](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        Tensor gx(xv.rows(), xv.cols());
        for (std::size_t r = 0; r < index.size(); ++r)
            for (std::size_t j = 0; j < xv.cols(); ++j) gx(index[r], j) += g(r, j);
        t.accumulate(x, std::move(gx));
    });
}

/// out[r] = x[r, column[r]] as an m x 1 column.
inline Var pick_columns(const Var& x, std::vector<std::size_t> column) {
    const Tensor& xv = x.value();
    if (column.size() != xv.rows()) throw DimensionError("pick_columns needs one column per row");
    Tensor out(xv.rows(), 1);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        if (column[r] >= xv.cols()) throw DimensionError("pick_columns column out of range");
        out(r, 0) = xv(r, column[r]);
    }
    return x.tape().record(std::move(out), {x}, [x, column = std::move(column)](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        Tensor gx(xv.rows(), xv.cols());
        for (std::size_t r = 0; r < column.size(); ++r) gx(r, column[r]) = g(r, 0);
        t.accumulate(x, std::move(gx));
    });
}

/// Softmax of a column vector within contiguous segments [offsets[s], offsets[s+1]).
inline Var segment_softmax(const Var& x, std::vector<std::size_t> offsets) {
    const Tensor& xv = x.value();
    if (xv.cols() != 1 || offsets.empty() || offsets.back() != xv.rows()) {
        throw DimensionError("segment_softmax expects a column covered by the segment offsets");
    }
    Tensor out(xv.rows(), 1);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        const std::size_t b = offsets[s], e = offsets[s + 1];
        if (b == e) continue;
        double m = xv[b];
        for (std::size_t i = b; i < e; ++i) m = std::max(m, xv[i]);
        double z = 0.0;
        for (std::size_t i = b; i < e; ++i) z += out[i] = std::exp(xv[i] - m);
        for (std::size_t i = b; i < e; ++i) out[i] /= z;
    }
    Tensor y = out;
    return x.tape().record(std::move(out), {x},
                           [x, y = std::move(y), offsets = std::move(offsets)](Tape& t, const Tensor& g) {
                               Tensor gx(y.rows(), 1);
                               for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
                                   double dot = 0.0;
                                   for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) dot += g[i] * y[i];
                                   for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i)
                                       gx[i] = y[i] * (g[i] - dot);
                               }
                               t.accumulate(x, std::move(gx));
                           });
}

/// Row sums within contiguous segments: (E x F) -> (S x F).
inline Var segment_sum(const Var& x, std::vector<std::size_t> offsets) {
    const Tensor& xv = x.value();
    if (offsets.empty() || offsets.back() != xv.rows()) {
        throw DimensionError("segment_sum offsets do not cover the input rows");
    }
    Tensor out(offsets.size() - 1, xv.cols());
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
        for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i)
            for (std::size_t j = 0; j < xv.cols(); ++j) out(s, j) += xv(i, j);
    return x.tape().record(std::move(out), {x}, [x, offsets = std::move(offsets)](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        Tensor gx(xv.rows(), xv.cols());
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
            for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i)
                for (std::size_t j = 0; j < xv.cols(); ++j) gx(i, j) = g(s, j);
        t.accumulate(x, std::move(gx));
    });
}

/// Horizontal concatenation [a | b].
inline Var concat_cols(const Var& a, const Var& b) {
    detail::require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rows() != bv.rows()) throw DimensionError("concat_cols row mismatch");
    Tensor out(av.rows(), av.cols() + bv.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j);
        for (std::size_t j = 0; j < bv.cols(); ++j) out(i, av.cols() + j) = bv(i, j);
    }
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        const std::size_t ca = t.value(a).cols();
        const std::size_t cb = t.value(b).cols();
        Tensor ga(g.rows(), ca), gb(g.rows(), cb);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < ca; ++j) ga(i, j) = g(i, j);
            for (std::size_t j = 0; j < cb; ++j) gb(i, j) = g(i, ca + j);
        }
        t.accumulate(a, std::move(ga));
        t.accumulate(b, std::move(gb));
    });
}

}  // namespace ad

// Found by argument-dependent lookup on Var.
using ad::operator+;
using ad::operator-;
using ad::operator*;
using ad::operator/;

}  // namespace cuq
