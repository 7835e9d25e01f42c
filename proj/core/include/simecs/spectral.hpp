#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "simecs/matrix.hpp"

namespace simecs {

enum class EigCriterion {
    LargestPositive,   // largest algebraic eigenvalues first
    MostNegative,      // smallest algebraic eigenvalues first
    LargestMagnitude,  // largest |eigenvalue| first
};

/// Top-d eigenpairs of a symmetric matrix. Eigenvalues are ordered by the
/// requested criterion; eigenvector columns are orthonormal. For a repeated
/// eigenvalue any orthonormal basis of its eigenspace may be returned, so
/// compare spectra and reconstructions, never raw vectors.
struct EigenDecomposition {
    std::vector<double> eigenvalues;  // length d
    Matrix eigenvectors;              // m x d, unit-norm orthogonal columns
};

/// Embedding that reconstructs an indefinite matrix as
/// sum_j signs[j] * coords[:,j] * coords[:,j]^T.
struct SignedEmbedding {
    Matrix coords;           // m x d
    std::vector<int> signs;  // +1 / -1, length d
};

/// Symmetric top-d eigensolver: orthogonal (subspace) iteration with
/// Rayleigh-Ritz extraction and locking of converged pairs, run on the
/// shifted matrix for algebraic criteria; LargestMagnitude merges the top
/// ends of S and -S. Input is symmetrized as (S + S^T)/2 after checking the
/// asymmetry stays within 1e-10; iteration stops when the subspace angle
/// change drops below 1e-10 (or d pairs are locked), and failing to converge
/// within 10,000 iterations or to meet the residual bound
/// ||Sv - lambda v|| < 1e-6 (||S||_F + |lambda|) is an error.
EigenDecomposition eig_sym_topd(const Matrix& s, std::size_t d, EigCriterion criterion);

/// Kernel-PCA style embedding Y = U_d sqrt(Lambda_d) from the d largest
/// algebraic eigenvalues; eigenpairs with lambda <= 0 contribute zero
/// columns, so the output width is always d.
Matrix kpca_embed(const Matrix& s, std::size_t d);

/// Embedding from the d largest-magnitude eigenpairs,
/// coords[:,j] = v_j sqrt(|lambda_j|), signs[j] = sign(lambda_j).
SignedEmbedding signed_embed(const Matrix& s, std::size_t d);

/// sum_j signs[j] * coords[:,j] coords[:,j]^T.
Matrix signed_reconstruct(const SignedEmbedding& e);

/// Fills unobserved entries with the mean of the observed ones,
/// re-symmetrizes, and embeds with kpca_embed.
Matrix mean_fill_embed(const Matrix& s, const Matrix& mask, std::size_t d);

/// Closed-form ridge regression: returns W minimizing
/// ||XW - Y||_F^2 + ridge ||W||_F^2.
Matrix regression_baseline(const Matrix& x, const Matrix& y_spectral, double ridge);

namespace detail {

/// Orthonormalizes the columns of q in place (modified Gram-Schmidt with one
/// reorthogonalization pass). Columns that collapse numerically are replaced
/// with fresh random directions drawn from rng_seed's stream.
void orthonormalize_columns(Matrix& q, std::uint64_t rng_seed);

/// Cyclic Jacobi on a small dense symmetric matrix; returns eigenvalues in
/// descending algebraic order with matching eigenvector columns. Used for
/// the Rayleigh-Ritz projections inside eig_sym_topd.
void jacobi_eigh(const Matrix& a, std::vector<double>& values, Matrix& vectors);

/// Solves the SPD system G X = B via Cholesky; throws if G is not positive
/// definite.
Matrix cholesky_solve(const Matrix& g, const Matrix& b);

}  // namespace detail

}  // namespace simecs
