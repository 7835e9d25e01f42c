#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

namespace simecs {

/// Dense real matrix in row-major order; the one numerical carrier shared by
/// every module. All addressing is (row, col), all public operations return
/// fresh matrices, and public results must be finite (checked in debug
/// builds).
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Literal construction for tests and small fixtures:
    /// Matrix::from_rows({{1, 2}, {3, 4}}).
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return values_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return values_.data() + i * cols_; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && values_ == other.values_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// a * b. Throws std::invalid_argument naming both shapes on a dimension
/// mismatch. May split the output rows across threads; the per-entry
/// summation order is fixed, so results do not depend on the thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

/// transpose(a) * b without materializing the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);

/// a * transpose(b) without materializing the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Sum of squared entries.
double frobenius_sq(const Matrix& a);

/// Mean of (a - b)^2 over entries where mask == 1, or over all entries when
/// mask is null. Throws on shape mismatch and on an all-zero mask
/// ("no observed entries").
double masked_mse(const Matrix& a, const Matrix& b, const Matrix* mask = nullptr);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

namespace detail {

/// Debug-build defect net: NaN/Inf anywhere in a public result is a bug in
/// the producer, not a condition to handle downstream.
void check_finite(const Matrix& m, const char* what);

/// Runs fn(begin, end) over [0, n) split across up to two chunks when the
/// estimated work is large enough to amortize a thread spawn.
void parallel_rows(std::size_t n, std::size_t flops_estimate,
                   const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace detail

}  // namespace simecs
