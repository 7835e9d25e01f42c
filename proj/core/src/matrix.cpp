#include "simecs/matrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace simecs {

namespace {

std::string shape_str(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

}  // namespace

namespace detail {

void check_finite(const Matrix& m, const char* what) {
#ifndef NDEBUG
    const double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(p[i])) {
            std::ostringstream os;
            os << what << ": non-finite value at flat index " << i;
            throw std::runtime_error(os.str());
        }
    }
#else
    (void)m;
    (void)what;
#endif
}

void parallel_rows(std::size_t n, std::size_t flops_estimate,
                   const std::function<void(std::size_t, std::size_t)>& fn) {
    constexpr std::size_t kMinFlopsForThread = 1u << 21;  // ~2M
    if (n >= 2 && flops_estimate >= kMinFlopsForThread &&
        std::thread::hardware_concurrency() > 1) {
        const std::size_t mid = n / 2;
        std::thread t([&] { fn(0, mid); });
        fn(mid, n);
        t.join();
    } else {
        fn(0, n);
    }
}

}  // namespace detail

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("from_rows: ragged rows");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: dimension mismatch " + shape_str(a) +
                                    " * " + shape_str(b));
    }
    Matrix c(a.rows(), b.cols());
    const std::size_t inner = a.cols(), nc = b.cols();
    detail::parallel_rows(a.rows(), a.rows() * inner * nc,
                          [&](std::size_t r0, std::size_t r1) {
        for (std::size_t i = r0; i < r1; ++i) {
            double* ci = c.row_ptr(i);
            const double* ai = a.row_ptr(i);
            for (std::size_t k = 0; k < inner; ++k) {
                const double aik = ai[k];
                const double* bk = b.row_ptr(k);
                for (std::size_t j = 0; j < nc; ++j) ci[j] += aik * bk[j];
            }
        }
    });
    detail::check_finite(c, "matmul");
    return c;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw std::invalid_argument("matmul_at: dimension mismatch " + shape_str(a) +
                                    "^T * " + shape_str(b));
    }
    Matrix c(a.cols(), b.cols());
    const std::size_t inner = a.rows(), nc = b.cols(), nr = a.cols();
    detail::parallel_rows(nr, nr * inner * nc, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t k = 0; k < inner; ++k) {
            const double* ak = a.row_ptr(k);
            const double* bk = b.row_ptr(k);
            for (std::size_t i = r0; i < r1; ++i) {
                const double aki = ak[i];
                double* ci = c.row_ptr(i);
                for (std::size_t j = 0; j < nc; ++j) ci[j] += aki * bk[j];
            }
        }
    });
    detail::check_finite(c, "matmul_at");
    return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("matmul_bt: dimension mismatch " + shape_str(a) +
                                    " * " + shape_str(b) + "^T");
    }
    Matrix c(a.rows(), b.rows());
    const std::size_t inner = a.cols(), nc = b.rows();
    detail::parallel_rows(a.rows(), a.rows() * inner * nc,
                          [&](std::size_t r0, std::size_t r1) {
        for (std::size_t i = r0; i < r1; ++i) {
            const double* ai = a.row_ptr(i);
            double* ci = c.row_ptr(i);
            for (std::size_t j = 0; j < nc; ++j) {
                const double* bj = b.row_ptr(j);
                double acc = 0.0;
                for (std::size_t k = 0; k < inner; ++k) acc += ai[k] * bj[k];
                ci[j] = acc;
            }
        }
    });
    detail::check_finite(c, "matmul_bt");
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

double frobenius_sq(const Matrix& a) {
    // compensated double-double accumulation: squares never cancel, so the
    // result is the correctly rounded exact sum and therefore identical for
    // any traversal order (transpose invariance holds exactly)
    double hi = 0.0, lo = 0.0;
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = p[i];
        const double sq = x * x;
        const double sq_err = std::fma(x, x, -sq);
        const double s = hi + sq;
        const double b = s - hi;
        const double sum_err = (hi - (s - b)) + (sq - b);
        hi = s;
        lo += sum_err + sq_err;
    }
    return hi + lo;
}

double masked_mse(const Matrix& a, const Matrix& b, const Matrix* mask) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("masked_mse: shape mismatch " + shape_str(a) +
                                    " vs " + shape_str(b));
    }
    if (mask && !mask->same_shape(a)) {
        throw std::invalid_argument("masked_mse: mask shape " + shape_str(*mask) +
                                    " does not match " + shape_str(a));
    }
    const double* pa = a.data();
    const double* pb = b.data();
    double acc = 0.0;
    std::size_t count = 0;
    if (mask) {
        const double* pm = mask->data();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (pm[i] == 1.0) {
                const double d = pa[i] - pb[i];
                acc += d * d;
                ++count;
            }
        }
        if (count == 0) throw std::invalid_argument("masked_mse: no observed entries");
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = pa[i] - pb[i];
            acc += d * d;
        }
        count = a.size();
        if (count == 0) throw std::invalid_argument("masked_mse: empty matrices");
    }
    return acc / static_cast<double>(count);
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("add: shape mismatch " + shape_str(a) + " vs " +
                                    shape_str(b));
    }
    Matrix c = a;
    double* pc = c.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < c.size(); ++i) pc[i] += pb[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("sub: shape mismatch " + shape_str(a) + " vs " +
                                    shape_str(b));
    }
    Matrix c = a;
    double* pc = c.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < c.size(); ++i) pc[i] -= pb[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    double* pc = c.data();
    for (std::size_t i = 0; i < c.size(); ++i) pc[i] *= s;
    return c;
}

}  // namespace simecs
