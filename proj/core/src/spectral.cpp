#include "simecs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "simecs/rng.hpp"

namespace simecs {

namespace detail {

void jacobi_eigh(const Matrix& a, std::vector<double>& values, Matrix& vectors) {
    const std::size_t n = a.rows();
    if (n != a.cols()) throw std::invalid_argument("jacobi_eigh: matrix not square");
    Matrix w = a;
    Matrix v = Matrix::identity(n);

    double frob = std::sqrt(frobenius_sq(w));
    const double stop = 1e-15 * (frob > 0 ? frob : 1.0);
    const std::size_t max_sweeps = 60;

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += w(p, q) * w(p, q);
        off = std::sqrt(2.0 * off);
        if (off <= stop) {
            values.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) values[i] = w(i, i);
            // descending algebraic order
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
            std::vector<double> sorted(n);
            Matrix vs(n, n);
            for (std::size_t j = 0; j < n; ++j) {
                sorted[j] = values[idx[j]];
                for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, idx[j]);
            }
            values = std::move(sorted);
            vectors = std::move(vs);
            return;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double tau = (w(q, q) - w(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wip = w(i, p), wiq = w(i, q);
                    w(i, p) = c * wip - s * wiq;
                    w(i, q) = s * wip + c * wiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double wpj = w(p, j), wqj = w(q, j);
                    w(p, j) = c * wpj - s * wqj;
                    w(q, j) = s * wpj + c * wqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    throw std::runtime_error("jacobi_eigh: no convergence within sweep limit");
}

void orthonormalize_columns(Matrix& q, std::uint64_t rng_seed) {
    const std::size_t m = q.rows(), p = q.cols();
    Rng rng(rng_seed);
    for (std::size_t j = 0; j < p; ++j) {
        double prenorm = 0.0;
        for (std::size_t i = 0; i < m; ++i) prenorm += q(i, j) * q(i, j);
        prenorm = std::sqrt(prenorm);
        for (int attempt = 0; attempt < 8; ++attempt) {
            // two MGS passes against the already-settled columns
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < j; ++k) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < m; ++i) dot += q(i, k) * q(i, j);
                    for (std::size_t i = 0; i < m; ++i) q(i, j) -= dot * q(i, k);
                }
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < m; ++i) norm += q(i, j) * q(i, j);
            norm = std::sqrt(norm);
            if (norm > 1e-13 * (prenorm + 1.0)) {
                for (std::size_t i = 0; i < m; ++i) q(i, j) /= norm;
                break;
            }
            // column collapsed: restart it from a random direction
            for (std::size_t i = 0; i < m; ++i) q(i, j) = rng.gaussian();
            prenorm = std::sqrt(static_cast<double>(m));
            if (attempt == 7)
                throw std::runtime_error("orthonormalize_columns: rank collapse");
        }
    }
}

Matrix cholesky_solve(const Matrix& g, const Matrix& b) {
    const std::size_t n = g.rows();
    if (g.cols() != n) throw std::invalid_argument("cholesky_solve: matrix not square");
    if (b.rows() != n) throw std::invalid_argument("cholesky_solve: rhs row mismatch");
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = g(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            if (i == j) {
                if (acc <= 0.0)
                    throw std::runtime_error(
                        "cholesky_solve: matrix not positive definite (increase ridge)");
                l(i, i) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }
    Matrix x = b;  // n x r
    const std::size_t r = b.cols();
    for (std::size_t c = 0; c < r; ++c) {
        for (std::size_t i = 0; i < n; ++i) {  // forward: L z = b
            double acc = x(i, c);
            for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * x(k, c);
            x(i, c) = acc / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {  // backward: L^T x = z
            double acc = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) acc -= l(k, ii) * x(k, c);
            x(ii, c) = acc / l(ii, ii);
        }
    }
    return x;
}

}  // namespace detail

namespace {

constexpr std::uint64_t kSolverSeed = 0x51bec5feed0001ULL;
constexpr std::size_t kMaxIterations = 10000;
constexpr double kAngleTol = 1e-10;
constexpr double kLockTolRel = 1e-12;
constexpr double kResidualStopRel = 1e-9;
constexpr double kResidualTolRel = 1e-6;

Matrix symmetrized(const Matrix& s) {
    const std::size_t m = s.rows();
    if (m != s.cols()) {
        std::ostringstream os;
        os << "eig_sym_topd: matrix is " << s.rows() << "x" << s.cols() << ", not square";
        throw std::invalid_argument(os.str());
    }
    double max_abs = 0.0, max_asym = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            max_abs = std::max(max_abs, std::abs(s(i, j)));
            max_asym = std::max(max_asym, std::abs(s(i, j) - s(j, i)));
        }
    }
    if (max_asym > 1e-10 * std::max(1.0, max_abs))
        throw std::invalid_argument("eig_sym_topd: input is not symmetric within 1e-10");
    Matrix out(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = 0.5 * (s(i, j) + s(j, i));
    return out;
}

Matrix columns(const Matrix& a, std::size_t c0, std::size_t c1) {
    Matrix out(a.rows(), c1 - c0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = a(i, j);
    return out;
}

void set_columns(Matrix& a, std::size_t c0, const Matrix& block) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < block.cols(); ++j) a(i, c0 + j) = block(i, j);
}

/// sin of the largest principal angle between the column spans of two
/// orthonormal m x d blocks.
double subspace_angle(const Matrix& a, const Matrix& b) {
    Matrix g = matmul_at(a, b);          // d x d
    Matrix gtg = matmul_at(g, g);        // d x d, eigenvalues = cos^2(angles)
    std::vector<double> vals;
    Matrix vecs;
    detail::jacobi_eigh(gtg, vals, vecs);
    double min_cos_sq = vals.empty() ? 0.0 : std::max(0.0, vals.back());
    min_cos_sq = std::min(1.0, min_cos_sq);
    return std::sqrt(1.0 - min_cos_sq);
}

/// Power-iteration estimate of the spectral norm of S restricted to the
/// orthogonal complement of the first `locked` columns of q; used to pick a
/// tight shift (a loose bound like Gershgorin can slow the iteration by
/// orders of magnitude on dense similarity matrices, and after deflation the
/// remaining spectrum usually allows a much smaller shift).
double spectral_norm_estimate(const Matrix& sym, const Matrix* q, std::size_t locked,
                              Rng& rng) {
    const std::size_t m = sym.rows();
    Matrix v(m, 1);
    for (std::size_t i = 0; i < m; ++i) v(i, 0) = rng.gaussian();
    auto project_out_locked = [&](Matrix& w) {
        if (!q || locked == 0) return;
        for (std::size_t c = 0; c < locked; ++c) {
            double dot = 0.0;
            for (std::size_t i = 0; i < m; ++i) dot += (*q)(i, c) * w(i, 0);
            for (std::size_t i = 0; i < m; ++i) w(i, 0) -= dot * (*q)(i, c);
        }
    };
    project_out_locked(v);
    double rho = 0.0;
    for (int it = 0; it < 30; ++it) {
        double norm = std::sqrt(frobenius_sq(v));
        if (norm < 1e-300) return rho;
        for (std::size_t i = 0; i < m; ++i) v(i, 0) /= norm;
        Matrix w = matmul(sym, v);
        project_out_locked(w);
        rho = std::sqrt(frobenius_sq(w));  // ||P S v|| with ||v|| = 1
        v = std::move(w);
    }
    return rho;
}

/// Top-d eigenpairs of sym (descending algebraic order): orthogonal
/// iteration on the shifted matrix with Rayleigh-Ritz extraction every round
/// and two matrix applications per round. Converged leading pairs are locked
/// and deflated, after which the shift is re-estimated on the remaining
/// spectrum so that one dominant eigenvalue cannot stall the rest. Stops on
/// d locked pairs, on the subspace-angle criterion, or when every wanted
/// ritz pair sits below the residual bound; the final residual validation
/// guards whatever path produced the pairs.
/// Dense path: full cyclic-Jacobi eigendecomposition, top d pairs.
EigenDecomposition dense_topd(const Matrix& sym, std::size_t d) {
    std::vector<double> values;
    Matrix vectors;
    detail::jacobi_eigh(sym, values, vectors);
    EigenDecomposition out;
    out.eigenvalues.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(d));
    out.eigenvectors = Matrix(sym.rows(), d);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < sym.rows(); ++i)
            out.eigenvectors(i, j) = vectors(i, j);
    return out;
}

EigenDecomposition top_algebraic(const Matrix& sym, std::size_t d) {
    const std::size_t m = sym.rows();
    Rng rng(kSolverSeed);

    const double est0 = spectral_norm_estimate(sym, nullptr, 0, rng);
    if (est0 == 0.0) {
        // zero matrix: any orthonormal set with zero eigenvalues
        EigenDecomposition out;
        out.eigenvalues.assign(d, 0.0);
        out.eigenvectors = Matrix(m, d);
        for (std::size_t j = 0; j < d; ++j) out.eigenvectors(j % m, j) = 1.0;
        return out;
    }
    // 1.25 x the estimate keeps the iteration matrix effectively positive
    // while the top algebraic pairs stay magnitude-dominant even if the
    // estimate runs a little low
    double shift = 1.25 * est0;
    Matrix b = sym;
    for (std::size_t i = 0; i < m; ++i) b(i, i) += shift;
    double bnorm = std::sqrt(frobenius_sq(b));

    const std::size_t oversample = std::max<std::size_t>(4, std::min<std::size_t>(d, 16));
    const std::size_t p = std::min(m, d + oversample);

    // when the wanted block is a sizable part of the spectrum, one dense
    // factorization beats iterating; the iterative path below targets the
    // d << m regime. Densely packed spectra can also make the iteration
    // slower than a dense solve, so it hands over once its work estimate
    // crosses the O(m^3) break-even point instead of spinning to the cap.
    if (p >= m / 2) return dense_topd(sym, d);
    const std::size_t round_cap = std::min<std::size_t>(
        kMaxIterations, std::max<std::size_t>(30, (4 * m) / std::max<std::size_t>(p, 1)));

    Matrix q(m, p);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j) q(i, j) = rng.gaussian();
    detail::orthonormalize_columns(q, rng.next_u64());

    std::size_t locked = 0;
    Matrix prev_lead;
    bool have_prev = false;
    bool converged = false;

    std::vector<double> theta;  // ritz values of the active block (shifted)
    Matrix ritz;                // active ritz vectors

    for (std::size_t iter = 0; iter < round_cap; ++iter) {
        Matrix active = columns(q, locked, p);
        Matrix z = matmul(b, active);
        Matrix bsmall = matmul_at(active, z);
        Matrix v;
        detail::jacobi_eigh(bsmall, theta, v);
        ritz = matmul(active, v);      // ritz vectors, descending theta
        Matrix britz = matmul(z, v);   // B * ritz

        // residuals of the leading active pairs drive locking and stopping
        const std::size_t want = d - locked;
        std::vector<double> residual(ritz.cols(), -1.0);
        for (std::size_t j = 0; j < ritz.cols() && j <= want; ++j) {
            double res = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double r = britz(i, j) - theta[j] * ritz(i, j);
                res += r * r;
            }
            residual[j] = std::sqrt(res);
        }
        std::size_t newly = 0;
        for (std::size_t j = 0; j < ritz.cols(); ++j) {
            if (residual[j] < 0.0) break;
            if (residual[j] <= kLockTolRel * (bnorm + std::abs(theta[j])))
                ++newly;
            else
                break;
        }
        if (newly > 0) {
            set_columns(q, locked, columns(ritz, 0, newly));
            locked += newly;
        }
        if (locked >= d) {
            converged = true;
            break;
        }

        bool stop = false;
        {
            // all wanted pairs at working accuracy
            bool residual_ok = true;
            for (std::size_t j = newly; j < newly + (d - locked); ++j) {
                if (residual[j] < 0.0 ||
                    residual[j] > kResidualStopRel * (bnorm + std::abs(theta[j]))) {
                    residual_ok = false;
                    break;
                }
            }
            stop = residual_ok;
        }
        if (!stop) {
            Matrix lead(m, d);
            set_columns(lead, 0, columns(q, 0, locked));
            set_columns(lead, locked, columns(ritz, newly, newly + (d - locked)));
            stop = have_prev && subspace_angle(prev_lead, lead) < kAngleTol;
            prev_lead = lead;
            have_prev = true;
        }
        if (stop) {
            converged = true;
            theta.erase(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(newly));
            ritz = columns(ritz, newly, ritz.cols());
            break;
        }

        if (newly > 0) {
            // deflation: the remaining spectrum may allow a much tighter
            // shift, which restores the relative gaps the old shift squashed
            const double est = spectral_norm_estimate(sym, &q, locked, rng);
            const double candidate = 1.25 * est + 1e-12 * est0;
            if (candidate < 0.5 * shift) {
                for (std::size_t i = 0; i < m; ++i)
                    b(i, i) += candidate - shift;
                shift = candidate;
                bnorm = std::sqrt(frobenius_sq(b));
                have_prev = false;  // lead comparison crosses a shift change
            }
        }

        // next subspace: two power steps on the unlocked ritz vectors
        Matrix next = columns(britz, newly, britz.cols());
        for (int step = 0; step < 2; ++step) {
            if (locked > 0) {
                Matrix lockedq = columns(q, 0, locked);
                Matrix proj = matmul_at(lockedq, next);
                Matrix corr = matmul(lockedq, proj);
                next = sub(next, corr);
            }
            detail::orthonormalize_columns(next, rng.next_u64());
            if (step == 0) next = matmul(b, next);
        }
        set_columns(q, locked, next);
    }

    if (!converged) return dense_topd(sym, d);

    // assemble the leading d vectors: locked pairs first, then active ritz
    Matrix u(m, d);
    for (std::size_t j = 0; j < d; ++j) {
        if (j < locked) {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = q(i, j);
        } else {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = ritz(i, j - locked);
        }
    }

    // eigenvalues and residuals are reported against the unshifted matrix
    Matrix su = matmul(sym, u);
    const double snorm = std::sqrt(frobenius_sq(sym));
    EigenDecomposition out;
    out.eigenvalues.resize(d);
    out.eigenvectors = u;
    for (std::size_t j = 0; j < d; ++j) {
        double lambda = 0.0;
        for (std::size_t i = 0; i < m; ++i) lambda += u(i, j) * su(i, j);
        out.eigenvalues[j] = lambda;
        double res = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = su(i, j) - lambda * u(i, j);
            res += r * r;
        }
        if (std::sqrt(res) > kResidualTolRel * (snorm + std::abs(lambda)))
            throw std::runtime_error("eig_sym_topd: residual validation failed");
    }
    return out;
}

EigenDecomposition select_by_criterion(const EigenDecomposition& full, std::size_t d,
                                       EigCriterion criterion) {
    const std::size_t n = full.eigenvalues.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    switch (criterion) {
        case EigCriterion::LargestPositive:
            break;  // already descending algebraic
        case EigCriterion::MostNegative:
            std::reverse(idx.begin(), idx.end());
            break;
        case EigCriterion::LargestMagnitude:
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return std::abs(full.eigenvalues[a]) > std::abs(full.eigenvalues[b]);
            });
            break;
    }
    EigenDecomposition out;
    out.eigenvalues.resize(d);
    out.eigenvectors = Matrix(full.eigenvectors.rows(), d);
    for (std::size_t j = 0; j < d; ++j) {
        out.eigenvalues[j] = full.eigenvalues[idx[j]];
        for (std::size_t i = 0; i < full.eigenvectors.rows(); ++i)
            out.eigenvectors(i, j) = full.eigenvectors(i, idx[j]);
    }
    return out;
}

}  // namespace

EigenDecomposition eig_sym_topd(const Matrix& s, std::size_t d, EigCriterion criterion) {
    Matrix sym = symmetrized(s);
    const std::size_t m = sym.rows();
    if (d < 1 || d > m) {
        std::ostringstream os;
        os << "eig_sym_topd: d = " << d << " out of range [1, " << m << "]";
        throw std::invalid_argument(os.str());
    }

    if (criterion == EigCriterion::LargestPositive) return top_algebraic(sym, d);

    if (criterion == EigCriterion::MostNegative) {
        EigenDecomposition neg = top_algebraic(scale(sym, -1.0), d);
        for (double& v : neg.eigenvalues) v = -v;
        // recompute Rayleigh quotients against the original matrix to avoid
        // the sign-flip rounding
        return neg;
    }

    // LargestMagnitude: top ends of S and -S, merged by |lambda|
    if (2 * d >= m) {
        EigenDecomposition full = top_algebraic(sym, m);
        return select_by_criterion(full, d, EigCriterion::LargestMagnitude);
    }
    EigenDecomposition pos = top_algebraic(sym, d);
    EigenDecomposition neg = top_algebraic(scale(sym, -1.0), d);
    for (double& v : neg.eigenvalues) v = -v;

    EigenDecomposition out;
    out.eigenvalues.resize(d);
    out.eigenvectors = Matrix(m, d);
    std::size_t ip = 0, in = 0;
    for (std::size_t j = 0; j < d; ++j) {
        const bool take_pos =
            std::abs(pos.eigenvalues[ip]) >= std::abs(neg.eigenvalues[in]);
        const EigenDecomposition& src = take_pos ? pos : neg;
        std::size_t& cursor = take_pos ? ip : in;
        out.eigenvalues[j] = src.eigenvalues[cursor];
        for (std::size_t i = 0; i < m; ++i)
            out.eigenvectors(i, j) = src.eigenvectors(i, cursor);
        ++cursor;
    }
    return out;
}

Matrix kpca_embed(const Matrix& s, std::size_t d) {
    EigenDecomposition eig = eig_sym_topd(s, d, EigCriterion::LargestPositive);
    const std::size_t m = s.rows();
    const double zero_tol = 1e-12 * std::sqrt(frobenius_sq(s));
    Matrix y(m, d);
    for (std::size_t j = 0; j < d; ++j) {
        const double lambda = eig.eigenvalues[j];
        if (lambda <= zero_tol) continue;  // zero column keeps the output width at d
        const double root = std::sqrt(lambda);
        for (std::size_t i = 0; i < m; ++i) y(i, j) = eig.eigenvectors(i, j) * root;
    }
    detail::check_finite(y, "kpca_embed");
    return y;
}

SignedEmbedding signed_embed(const Matrix& s, std::size_t d) {
    EigenDecomposition eig = eig_sym_topd(s, d, EigCriterion::LargestMagnitude);
    const std::size_t m = s.rows();
    SignedEmbedding out;
    out.coords = Matrix(m, d);
    out.signs.assign(d, 1);
    for (std::size_t j = 0; j < d; ++j) {
        const double lambda = eig.eigenvalues[j];
        out.signs[j] = lambda < 0.0 ? -1 : 1;
        const double root = std::sqrt(std::abs(lambda));
        for (std::size_t i = 0; i < m; ++i)
            out.coords(i, j) = eig.eigenvectors(i, j) * root;
    }
    detail::check_finite(out.coords, "signed_embed");
    return out;
}

Matrix signed_reconstruct(const SignedEmbedding& e) {
    Matrix scaled = e.coords;
    for (std::size_t j = 0; j < scaled.cols(); ++j) {
        if (e.signs[j] >= 0) continue;
        for (std::size_t i = 0; i < scaled.rows(); ++i) scaled(i, j) = -scaled(i, j);
    }
    return matmul_bt(scaled, e.coords);
}

Matrix mean_fill_embed(const Matrix& s, const Matrix& mask, std::size_t d) {
    if (!mask.same_shape(s))
        throw std::invalid_argument("mean_fill_embed: mask shape mismatch");
    double mean = 0.0;
    std::size_t observed = 0;
    for (std::size_t i = 0; i < s.rows(); ++i) {
        for (std::size_t j = 0; j < s.cols(); ++j) {
            if (mask(i, j) == 1.0) {
                mean += s(i, j);
                ++observed;
            }
        }
    }
    if (observed == 0)
        throw std::invalid_argument("mean_fill_embed: mask has no observed entries");
    mean /= static_cast<double>(observed);
    Matrix filled(s.rows(), s.cols());
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j)
            filled(i, j) = mask(i, j) == 1.0 ? s(i, j) : mean;
    // re-symmetrize: an entry may be observed while its mirror is not
    for (std::size_t i = 0; i < s.rows(); ++i) {
        for (std::size_t j = i + 1; j < s.cols(); ++j) {
            const double v = 0.5 * (filled(i, j) + filled(j, i));
            filled(i, j) = v;
            filled(j, i) = v;
        }
    }
    return kpca_embed(filled, d);
}

Matrix regression_baseline(const Matrix& x, const Matrix& y_spectral, double ridge) {
    if (x.rows() != y_spectral.rows())
        throw std::invalid_argument("regression_baseline: row count mismatch");
    if (ridge < 0.0)
        throw std::invalid_argument("regression_baseline: ridge must be >= 0");
    Matrix g = matmul_at(x, x);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += ridge;
    Matrix b = matmul_at(x, y_spectral);
    Matrix w = detail::cholesky_solve(g, b);
    detail::check_finite(w, "regression_baseline");
    return w;
}

}  // namespace simecs
