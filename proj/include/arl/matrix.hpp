#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arl {

/// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values))
    {
        if (data_.size() != rows * cols) {
            throw std::invalid_argument("Matrix: " + std::to_string(data_.size()) +
                                        " values for shape [" + std::to_string(rows) + "x" +
                                        std::to_string(cols) + "]");
        }
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows)
    {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        Matrix m(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) {
                throw std::invalid_argument("Matrix::from_rows: ragged rows");
            }
            std::copy(row.begin(), row.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * c));
            ++i;
        }
        return m;
    }

    static Matrix row_vector(std::initializer_list<double> values)
    {
        return Matrix(1, values.size(), std::vector<double>(values));
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool same_shape(const Matrix& other) const noexcept
    {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double& operator()(std::size_t r, std::size_t c) noexcept
    {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const noexcept
    {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] std::span<double> row(std::size_t r) noexcept
    {
        return std::span<double>(data_).subspan(r * cols_, cols_);
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept
    {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] inline std::string shape_string(const Matrix& m)
{
    return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

[[nodiscard]] inline bool all_finite(const Matrix& m)
{
    return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

// Kernels shared by the tape and by tape-free evaluation so that both paths
// produce bitwise-identical values.
namespace kernel {

inline void require_same_shape(const char* op, const Matrix& a, const Matrix& b)
{
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                                    shape_string(b));
    }
}

/// a[r x k] * b[k x c]
[[nodiscard]] inline Matrix matmul(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* orow = out.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            const double* brow = b.row(k).data();
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

/// out += a^T * b  (a: [r x k], b: [r x c], out: [k x c])
inline void add_matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out)
{
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* brow = b.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            double* orow = out.row(k).data();
            for (std::size_t j = 0; j < b.cols(); ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
}

/// out += a * b^T  (a: [r x c], b: [k x c], out: [r x k])
inline void add_matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out)
{
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i).data();
        double* orow = out.row(i).data();
        for (std::size_t k = 0; k < b.rows(); ++k) {
            const double* brow = b.row(k).data();
            double acc = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) {
                acc += arow[j] * brow[j];
            }
            orow[k] += acc;
        }
    }
}

/// x[B x n] + bias[1 x n] broadcast over rows.
[[nodiscard]] inline Matrix add_bias(const Matrix& x, const Matrix& bias)
{
    if (bias.rows() != 1 || bias.cols() != x.cols()) {
        throw std::invalid_argument("add_bias: shape mismatch " + shape_string(x) + " vs " + shape_string(bias));
    }
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            r[j] += bias(0, j);
        }
    }
    return out;
}

template <class F>
[[nodiscard]] Matrix map(const Matrix& x, F&& f)
{
    Matrix out(x.rows(), x.cols());
    auto in = x.values();
    auto o = out.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        o[i] = f(in[i]);
    }
    return out;
}

[[nodiscard]] inline double sigmoid(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

[[nodiscard]] inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Row-wise log-softmax with max subtraction.
[[nodiscard]] inline Matrix log_softmax(const Matrix& x)
{
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto in = x.row(i);
        auto o = out.row(i);
        const double mx = *std::max_element(in.begin(), in.end());
        double s = 0.0;
        for (double v : in) {
            s += std::exp(v - mx);
        }
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = in[j] - lse;
        }
    }
    return out;
}

[[nodiscard]] inline Matrix softmax(const Matrix& x)
{
    return map(log_softmax(x), [](double v) { return std::exp(v); });
}

} // namespace kernel

} // namespace arl
