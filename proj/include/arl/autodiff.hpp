#pragma once

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// A Tape is an append-only list of nodes. Each node stores its forward value,
// a gradient accumulator of the same shape and the indices of its parents,
// which always precede it. backward() walks the list in reverse.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arl/matrix.hpp"

namespace arl::ad {

enum class OpKind {
    leaf,        // differentiable input (parameter)
    constant,    // non-differentiable input
    matmul,      // [r x k] * [k x c]
    add,         // same shape
    sub,         // same shape
    add_bias,    // [B x n] + [1 x n]
    mul,         // elementwise, same shape
    relu,
    sigmoid,
    tanh,
    exp,
    log,
    log_softmax, // row-wise
    sum,         // -> [1 x 1]
    mean,        // -> [1 x 1]
    scale,       // payload * x
    shift,       // x + payload
};

[[nodiscard]] inline const char* op_name(OpKind k)
{
    switch (k) {
    case OpKind::leaf: return "leaf";
    case OpKind::constant: return "constant";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::add_bias: return "add_bias";
    case OpKind::mul: return "mul";
    case OpKind::relu: return "relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::log_softmax: return "log_softmax";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::scale: return "scale";
    case OpKind::shift: return "shift";
    }
    return "?";
}

class Tape;

/// Reference to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t index = 0;
};

/// Leaf-node index -> accumulated gradient.
using GradientMap = std::map<std::size_t, Matrix>;

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Matrix value) { return push(OpKind::leaf, std::move(value), {}, 0, 0.0); }
    Var constant(Matrix value) { return push(OpKind::constant, std::move(value), {}, 0, 0.0); }

    /// Records an operation on existing nodes and evaluates it.
    Var record(OpKind kind, std::span<const Var> inputs, double payload = 0.0)
    {
        const std::size_t arity = expected_arity(kind);
        if (inputs.size() != arity) {
            throw std::invalid_argument(std::string(op_name(kind)) + ": expected " + std::to_string(arity) +
                                        " inputs, got " + std::to_string(inputs.size()));
        }
        std::array<std::size_t, 2> parents{0, 0};
        for (std::size_t i = 0; i < arity; ++i) {
            if (inputs[i].tape != this || inputs[i].index >= nodes_.size()) {
                throw std::invalid_argument(std::string(op_name(kind)) + ": input belongs to another tape");
            }
            parents[i] = inputs[i].index;
        }
        Matrix out = forward(kind, parents, arity, payload);
        return push(kind, std::move(out), parents, arity, payload);
    }

    [[nodiscard]] const Matrix& value(Var v) const { return nodes_.at(v.index).value; }
    [[nodiscard]] const Matrix& grad(Var v) const { return nodes_.at(v.index).grad; }
    [[nodiscard]] double scalar(Var v) const
    {
        const Matrix& m = value(v);
        if (m.rows() != 1 || m.cols() != 1) {
            throw std::invalid_argument("scalar: node has shape " + shape_string(m));
        }
        return m(0, 0);
    }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] OpKind kind(Var v) const { return nodes_.at(v.index).kind; }
    [[nodiscard]] std::span<const std::size_t> parents(Var v) const
    {
        const Node& n = nodes_.at(v.index);
        return std::span<const std::size_t>(n.parents.data(), n.arity);
    }

    /// Resets every gradient accumulator to zero.
    void zero_grad()
    {
        for (Node& n : nodes_) {
            n.grad.fill(0.0);
        }
    }

    /// Accumulates d(loss)/d(leaf) into every leaf reachable from `loss`.
    /// Intermediate adjoints are recomputed from scratch on each call, so
    /// calling twice without zero_grad() doubles the leaf gradients.
    GradientMap backward(Var loss)
    {
        if (loss.tape != this || loss.index >= nodes_.size()) {
            throw std::invalid_argument("backward: loss belongs to another tape");
        }
        const Matrix& lv = nodes_[loss.index].value;
        if (lv.rows() != 1 || lv.cols() != 1) {
            throw std::invalid_argument("backward: loss must be scalar, got " + shape_string(lv));
        }
        for (Node& n : nodes_) {
            if (n.kind != OpKind::leaf) {
                n.grad.fill(0.0);
            }
        }
        nodes_[loss.index].grad(0, 0) += 1.0;
        for (std::size_t i = loss.index + 1; i-- > 0;) {
            if (nodes_[i].arity > 0) {
                propagate(i);
            }
        }
        GradientMap out;
        for (std::size_t i = 0; i <= loss.index; ++i) {
            if (nodes_[i].kind == OpKind::leaf) {
                out.emplace(i, nodes_[i].grad);
            }
        }
        return out;
    }

private:
    struct Node {
        OpKind kind;
        Matrix value;
        Matrix grad;
        std::array<std::size_t, 2> parents;
        std::size_t arity;
        double payload;
    };

    static std::size_t expected_arity(OpKind k)
    {
        switch (k) {
        case OpKind::leaf:
        case OpKind::constant: return 0;
        case OpKind::matmul:
        case OpKind::add:
        case OpKind::sub:
        case OpKind::add_bias:
        case OpKind::mul: return 2;
        default: return 1;
        }
    }

    Var push(OpKind kind, Matrix value, std::array<std::size_t, 2> parents, std::size_t arity, double payload)
    {
        Matrix g(value.rows(), value.cols());
        nodes_.push_back(Node{kind, std::move(value), std::move(g), parents, arity, payload});
        return Var{this, nodes_.size() - 1};
    }

    Matrix forward(OpKind kind, const std::array<std::size_t, 2>& p, std::size_t arity, double payload) const
    {
        const Matrix& a = nodes_[p[0]].value;
        const Matrix& b = arity > 1 ? nodes_[p[1]].value : a;
        switch (kind) {
        case OpKind::matmul: return kernel::matmul(a, b);
        case OpKind::add: {
            kernel::require_same_shape("add", a, b);
            Matrix out = a;
            for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
            return out;
        }
        case OpKind::sub: {
            kernel::require_same_shape("sub", a, b);
            Matrix out = a;
            for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.values()[i];
            return out;
        }
        case OpKind::mul: {
            kernel::require_same_shape("mul", a, b);
            Matrix out = a;
            for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
            return out;
        }
        case OpKind::add_bias: return kernel::add_bias(a, b);
        case OpKind::relu: return kernel::map(a, kernel::relu);
        case OpKind::sigmoid: return kernel::map(a, kernel::sigmoid);
        case OpKind::tanh: return kernel::map(a, [](double v) { return std::tanh(v); });
        case OpKind::exp: return kernel::map(a, [](double v) { return std::exp(v); });
        case OpKind::log: return kernel::map(a, [](double v) { return std::log(v); });
        case OpKind::log_softmax:
            if (a.cols() == 0) {
                throw std::invalid_argument("log_softmax: shape mismatch " + shape_string(a) + " has no columns");
            }
            return kernel::log_softmax(a);
        case OpKind::sum: {
            double s = 0.0;
            for (double v : a.values()) s += v;
            return Matrix(1, 1, s);
        }
        case OpKind::mean: {
            if (a.size() == 0) {
                throw std::invalid_argument("mean: empty input " + shape_string(a));
            }
            double s = 0.0;
            for (double v : a.values()) s += v;
            return Matrix(1, 1, s / static_cast<double>(a.size()));
        }
        case OpKind::scale: return kernel::map(a, [payload](double v) { return payload * v; });
        case OpKind::shift: return kernel::map(a, [payload](double v) { return v + payload; });
        case OpKind::leaf:
        case OpKind::constant: break;
        }
        throw std::logic_error("forward: unsupported op");
    }

    void propagate(std::size_t i)
    {
        Node& n = nodes_[i];
        const Matrix& g = n.grad;
        Node& pa = nodes_[n.parents[0]];
        auto ga = pa.grad.values();
        auto gv = g.values();
        switch (n.kind) {
        case OpKind::matmul: {
            Node& pb = nodes_[n.parents[1]];
            kernel::add_matmul_a_bt(g, pb.value, pa.grad);
            kernel::add_matmul_at_b(pa.value, g, pb.grad);
            break;
        }
        case OpKind::add: {
            auto gb = nodes_[n.parents[1]].grad.values();
            for (std::size_t k = 0; k < gv.size(); ++k) {
                ga[k] += gv[k];
                gb[k] += gv[k];
            }
            break;
        }
        case OpKind::sub: {
            auto gb = nodes_[n.parents[1]].grad.values();
            for (std::size_t k = 0; k < gv.size(); ++k) {
                ga[k] += gv[k];
                gb[k] -= gv[k];
            }
            break;
        }
        case OpKind::mul: {
            Node& pb = nodes_[n.parents[1]];
            auto av = pa.value.values();
            auto bv = pb.value.values();
            auto gb = pb.grad.values();
            for (std::size_t k = 0; k < gv.size(); ++k) {
                ga[k] += gv[k] * bv[k];
                gb[k] += gv[k] * av[k];
            }
            break;
        }
        case OpKind::add_bias: {
            Matrix& gb = nodes_[n.parents[1]].grad;
            for (std::size_t r = 0; r < g.rows(); ++r) {
                auto row = g.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) {
                    gb(0, c) += row[c];
                }
            }
            for (std::size_t k = 0; k < gv.size(); ++k) ga[k] += gv[k];
            break;
        }
        case OpKind::relu: {
            auto xv = pa.value.values();
            for (std::size_t k = 0; k < gv.size(); ++k) {
                if (xv[k] > 0.0) ga[k] += gv[k];
            }
            break;
        }
        case OpKind::sigmoid: {
            auto yv = n.value.values();
            for (std::size_t k = 0; k < gv.size(); ++k) ga[k] += gv[k] * yv[k] * (1.0 - yv[k]);
            break;
        }
        case OpKind::tanh: {
            auto yv = n.value.values();
            for (std::size_t k = 0; k < gv.size(); ++k) ga[k] += gv[k] * (1.0 - yv[k] * yv[k]);
            break;
        }
        case OpKind::exp: {
            auto yv = n.value.values();
            for (std::size_t k = 0; k < gv.size(); ++k) ga[k] += gv[k] * yv[k];
            break;
        }
        case OpKind::log: {
            auto xv = pa.value.values();
            for (std::size_t k = 0; k < gv.size(); ++k) ga[k] += gv[k] / xv[k];
            break;
        }
        case OpKind::log_softmax: {
            const Matrix& y = n.value;
            for (std::size_t r = 0; r < y.rows(); ++r) {
                auto yr = y.row(r);
                auto gr = g.row(r);
                auto gar = pa.grad.row(r);
                double gsum = 0.0;
                for (double v : gr) gsum += v;
                for (std::size_t c = 0; c < yr.size(); ++c) {
                    gar[c] += gr[c] - std::exp(yr[c]) * gsum;
                }
            }
            break;
        }
        case OpKind::sum: {
            const double s = g(0, 0);
            for (double& v : ga) v += s;
            break;
        }
        case OpKind::mean: {
            const double s = g(0, 0) / static_cast<double>(ga.size());
            for (double& v : ga) v += s;
            break;
        }
        case OpKind::scale:
            for (std::size_t k = 0; k < gv.size(); ++k) ga[k] += n.payload * gv[k];
            break;
        case OpKind::shift:
            for (std::size_t k = 0; k < gv.size(); ++k) ga[k] += gv[k];
            break;
        case OpKind::leaf:
        case OpKind::constant: break;
        }
    }

    std::vector<Node> nodes_;
};

// Convenience wrappers.

namespace detail {
inline Var unary(OpKind k, Var a, double payload = 0.0)
{
    const std::array<Var, 1> in{a};
    return a.tape->record(k, in, payload);
}
inline Var binary(OpKind k, Var a, Var b)
{
    const std::array<Var, 2> in{a, b};
    return a.tape->record(k, in);
}
} // namespace detail

inline Var matmul(Var a, Var b) { return detail::binary(OpKind::matmul, a, b); }
inline Var add(Var a, Var b) { return detail::binary(OpKind::add, a, b); }
inline Var sub(Var a, Var b) { return detail::binary(OpKind::sub, a, b); }
inline Var mul(Var a, Var b) { return detail::binary(OpKind::mul, a, b); }
inline Var add_bias(Var x, Var bias) { return detail::binary(OpKind::add_bias, x, bias); }
inline Var relu(Var a) { return detail::unary(OpKind::relu, a); }
inline Var sigmoid(Var a) { return detail::unary(OpKind::sigmoid, a); }
inline Var tanh(Var a) { return detail::unary(OpKind::tanh, a); }
inline Var exp(Var a) { return detail::unary(OpKind::exp, a); }
inline Var log(Var a) { return detail::unary(OpKind::log, a); }
inline Var log_softmax(Var a) { return detail::unary(OpKind::log_softmax, a); }
inline Var sum(Var a) { return detail::unary(OpKind::sum, a); }
inline Var mean(Var a) { return detail::unary(OpKind::mean, a); }
inline Var scale(Var a, double s) { return detail::unary(OpKind::scale, a, s); }
inline Var shift(Var a, double c) { return detail::unary(OpKind::shift, a, c); }

/// Central-difference gradient of a scalar function of a parameter vector.
[[nodiscard]] inline std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f, std::span<const double> point, double h)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite_difference_grad: step must be positive");
    }
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::domain_error("finite_difference_grad: non-finite evaluation at coordinate " +
                                    std::to_string(i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace arl::ad
