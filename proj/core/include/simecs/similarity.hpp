#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "simecs/matrix.hpp"

namespace simecs {

enum class TargetKind { SquareSymmetric, Rectangular };

/// Target relation matrix or stacked tensor of k slices, with an optional
/// {0,1} observation mask shared across slices.
struct TargetSpec {
    std::vector<Matrix> slices;  // k >= 1 matrices, all m x n
    std::optional<Matrix> mask;  // m x n when present
    TargetKind kind = TargetKind::SquareSymmetric;

    std::size_t k() const { return slices.size(); }
    std::size_t rows() const { return slices.empty() ? 0 : slices.front().rows(); }
    std::size_t cols() const { return slices.empty() ? 0 : slices.front().cols(); }

    static TargetSpec square(Matrix s);
    static TargetSpec square(Matrix s, Matrix mask);
    static TargetSpec rectangular(Matrix r);
    static TargetSpec rectangular(Matrix r, Matrix mask);

    /// Checks the structural invariants (shapes, mask shape, symmetry of
    /// square slices on observed entries) and throws on violation.
    void validate() const;
};

/// S[i,j] = exp(-gamma ||x_i - x_j||^2); unit diagonal, exactly symmetric.
Matrix rbf_kernel(const Matrix& x, double gamma);

/// The gamma = 1 / (2 median^2) convention over pairwise distances, used as
/// the default when no explicit kernel width is given.
double median_heuristic_gamma(const Matrix& x);

/// S[i,j] = 1 if labels[i] == labels[j], else 0.
Matrix label_similarity(const std::vector<int>& labels);

/// Overlap coefficient |black(i) & black(j)| / min(|black(i)|, |black(j)|)
/// on rows of a {0,1} matrix; unit diagonal. A row without any black pixel
/// is an error naming the row.
Matrix simpson_similarity(const Matrix& x_binary);

/// Threshold used when binarizing gray-scale features for the Simpson score:
/// a pixel is black when its value exceeds this fraction of the global max.
inline constexpr double kBinarizeThreshold = 0.5;

Matrix binarize(const Matrix& x, double threshold_fraction = kBinarizeThreshold);

/// Double centering: S - row means - column means + grand mean. Row and
/// column sums of the result vanish.
Matrix center(const Matrix& s);

/// s / max|entry|; errors on an all-zero matrix.
Matrix normalize_range(const Matrix& s);

/// s / lambda_max where lambda_max is the largest-magnitude eigenvalue.
Matrix normalize_by_top_eigenvalue(const Matrix& s);

/// {0,1} observation mask. For square shapes the mask is symmetric (an entry
/// and its transpose share fate) and the diagonal is always observed.
Matrix random_mask(std::size_t rows, std::size_t cols, double fraction_missing,
                   std::uint64_t seed);

/// Elementwise mean of equally-shaped matrices; callers normalize each input
/// by its top eigenvalue first when combining similarity matrices.
Matrix average_similarities(const std::vector<Matrix>& mats);

}  // namespace simecs
