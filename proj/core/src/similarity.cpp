#include "simecs/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "simecs/rng.hpp"
#include "simecs/spectral.hpp"

namespace simecs {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

TargetSpec TargetSpec::square(Matrix s) {
    TargetSpec t;
    t.slices.push_back(std::move(s));
    t.kind = TargetKind::SquareSymmetric;
    t.validate();
    return t;
}

TargetSpec TargetSpec::square(Matrix s, Matrix mask) {
    TargetSpec t;
    t.slices.push_back(std::move(s));
    t.mask = std::move(mask);
    t.kind = TargetKind::SquareSymmetric;
    t.validate();
    return t;
}

TargetSpec TargetSpec::rectangular(Matrix r) {
    TargetSpec t;
    t.slices.push_back(std::move(r));
    t.kind = TargetKind::Rectangular;
    t.validate();
    return t;
}

TargetSpec TargetSpec::rectangular(Matrix r, Matrix mask) {
    TargetSpec t;
    t.slices.push_back(std::move(r));
    t.mask = std::move(mask);
    t.kind = TargetKind::Rectangular;
    t.validate();
    return t;
}

void TargetSpec::validate() const {
    require(!slices.empty(), "TargetSpec: k must be >= 1");
    const std::size_t m = slices.front().rows();
    const std::size_t n = slices.front().cols();
    for (const Matrix& s : slices)
        require(s.rows() == m && s.cols() == n, "TargetSpec: slices differ in shape");
    if (mask) {
        require(mask->rows() == m && mask->cols() == n,
                "TargetSpec: mask shape does not match slices");
        for (std::size_t i = 0; i < mask->size(); ++i) {
            const double v = mask->data()[i];
            require(v == 0.0 || v == 1.0, "TargetSpec: mask entries must be 0 or 1");
        }
    }
    if (kind == TargetKind::SquareSymmetric) {
        require(m == n, "TargetSpec: square_symmetric target must be square");
        for (const Matrix& s : slices) {
            double max_abs = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i)
                max_abs = std::max(max_abs, std::abs(s.data()[i]));
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    const bool observed =
                        !mask || ((*mask)(i, j) == 1.0 && (*mask)(j, i) == 1.0);
                    if (!observed) continue;
                    if (std::abs(s(i, j) - s(j, i)) > 1e-10 * std::max(1.0, max_abs))
                        throw std::invalid_argument(
                            "TargetSpec: square slice is not symmetric on observed "
                            "entries");
                }
            }
        }
    }
}

Matrix rbf_kernel(const Matrix& x, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("rbf_kernel: gamma must be > 0");
    const std::size_t m = x.rows(), d = x.cols();
    Matrix s(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        s(i, i) = 1.0;
        const double* xi = x.row_ptr(i);
        for (std::size_t j = i + 1; j < m; ++j) {
            const double* xj = x.row_ptr(j);
            double dist = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = xi[c] - xj[c];
                dist += diff * diff;
            }
            const double v = std::exp(-gamma * dist);
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    detail::check_finite(s, "rbf_kernel");
    return s;
}

double median_heuristic_gamma(const Matrix& x) {
    const std::size_t m = x.rows(), d = x.cols();
    if (m < 2) throw std::invalid_argument("median_heuristic_gamma: need >= 2 rows");
    std::vector<double> dists;
    dists.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            double dist = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = x(i, c) - x(j, c);
                dist += diff * diff;
            }
            dists.push_back(dist);
        }
    }
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    const double median_sq = dists[dists.size() / 2];
    if (median_sq <= 0.0)
        throw std::invalid_argument("median_heuristic_gamma: all points coincide");
    return 1.0 / (2.0 * median_sq);
}

Matrix label_similarity(const std::vector<int>& labels) {
    const std::size_t m = labels.size();
    Matrix s(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        s(i, i) = 1.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double v = labels[i] == labels[j] ? 1.0 : 0.0;
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

Matrix simpson_similarity(const Matrix& x_binary) {
    const std::size_t m = x_binary.rows(), d = x_binary.cols();
    std::vector<double> counts(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = x_binary.row_ptr(i);
        for (std::size_t c = 0; c < d; ++c) {
            const double v = row[c];
            if (v != 0.0 && v != 1.0)
                throw std::invalid_argument("simpson_similarity: input is not {0,1}");
            counts[i] += v;
        }
        if (counts[i] == 0.0) {
            std::ostringstream os;
            os << "simpson_similarity: row " << i << " has zero black pixels";
            throw std::invalid_argument(os.str());
        }
    }
    Matrix s(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        s(i, i) = 1.0;
        const double* xi = x_binary.row_ptr(i);
        for (std::size_t j = i + 1; j < m; ++j) {
            const double* xj = x_binary.row_ptr(j);
            double inter = 0.0;
            for (std::size_t c = 0; c < d; ++c) inter += xi[c] * xj[c];
            const double v = inter / std::min(counts[i], counts[j]);
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

Matrix binarize(const Matrix& x, double threshold_fraction) {
    double max_abs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        max_abs = std::max(max_abs, std::abs(x.data()[i]));
    if (max_abs == 0.0) throw std::invalid_argument("binarize: all-zero input");
    const double threshold = threshold_fraction * max_abs;
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i)
        out.data()[i] = x.data()[i] > threshold ? 1.0 : 0.0;
    return out;
}

Matrix center(const Matrix& s) {
    const std::size_t m = s.rows(), n = s.cols();
    if (m != n) throw std::invalid_argument("center: matrix must be square");
    std::vector<double> row_mean(m, 0.0), col_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row_mean[i] += s(i, j);
            col_mean[j] += s(i, j);
            grand += s(i, j);
        }
    }
    for (double& v : row_mean) v /= static_cast<double>(n);
    for (double& v : col_mean) v /= static_cast<double>(m);
    grand /= static_cast<double>(m) * static_cast<double>(n);
    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = (s(i, j) - (row_mean[i] + col_mean[j])) + grand;
    detail::check_finite(out, "center");
    return out;
}

Matrix normalize_range(const Matrix& s) {
    double max_abs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        max_abs = std::max(max_abs, std::abs(s.data()[i]));
    if (max_abs == 0.0) throw std::invalid_argument("normalize_range: all-zero matrix");
    return scale(s, 1.0 / max_abs);
}

Matrix normalize_by_top_eigenvalue(const Matrix& s) {
    EigenDecomposition top = eig_sym_topd(s, 1, EigCriterion::LargestMagnitude);
    const double lambda = top.eigenvalues[0];
    double max_abs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        max_abs = std::max(max_abs, std::abs(s.data()[i]));
    if (std::abs(lambda) <= 1e-12 * std::max(1.0, max_abs))
        throw std::invalid_argument(
            "normalize_by_top_eigenvalue: top eigenvalue is zero");
    return scale(s, 1.0 / lambda);
}

Matrix random_mask(std::size_t rows, std::size_t cols, double fraction_missing,
                   std::uint64_t seed) {
    if (fraction_missing < 0.0 || fraction_missing >= 1.0)
        throw std::invalid_argument("random_mask: fraction_missing must be in [0, 1)");
    Rng rng(seed);
    Matrix mask(rows, cols);
    if (rows == cols) {
        // symmetric fate; self-similarities stay observed
        for (std::size_t i = 0; i < rows; ++i) {
            mask(i, i) = 1.0;
            for (std::size_t j = i + 1; j < cols; ++j) {
                const double v = rng.uniform() >= fraction_missing ? 1.0 : 0.0;
                mask(i, j) = v;
                mask(j, i) = v;
            }
        }
    } else {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                mask(i, j) = rng.uniform() >= fraction_missing ? 1.0 : 0.0;
    }
    return mask;
}

Matrix average_similarities(const std::vector<Matrix>& mats) {
    if (mats.empty())
        throw std::invalid_argument("average_similarities: empty input list");
    const Matrix& first = mats.front();
    for (const Matrix& m : mats)
        if (!m.same_shape(first))
            throw std::invalid_argument("average_similarities: shape mismatch");
    Matrix out(first.rows(), first.cols());
    const double inv = 1.0 / static_cast<double>(mats.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (const Matrix& m : mats) acc += m.data()[i];
        out.data()[i] = acc * inv;
    }
    return out;
}

}  // namespace simecs
