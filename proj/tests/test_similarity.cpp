#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "simecs/rng.hpp"
#include "simecs/similarity.hpp"
#include "simecs/spectral.hpp"

using namespace simecs;

namespace {

bool bitwise_symmetric(const Matrix& s) {
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = i + 1; j < s.cols(); ++j)
            if (s(i, j) != s(j, i)) return false;
    return true;
}

}  // namespace

TEST_CASE("rbf_kernel diagonal, duplicates, pairwise oracle") {
    Matrix x = oracles::random_matrix(10, 4, 1, -1.0, 1.0);
    for (std::size_t j = 0; j < 4; ++j) x(7, j) = x(2, j);  // duplicate points

    Matrix s = rbf_kernel(x, 0.5);
    CHECK(bitwise_symmetric(s));
    for (std::size_t i = 0; i < 10; ++i) CHECK(s(i, i) == 1.0);
    CHECK(s(2, 7) == 1.0);

    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            double dist = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                const double diff = x(i, c) - x(j, c);
                dist += diff * diff;
            }
            const double expected = i == j ? 1.0 : std::exp(-0.5 * dist);
            CHECK(std::abs(s(i, j) - expected) < 1e-12);
            CHECK(s(i, j) > 0.0);
            CHECK(s(i, j) <= 1.0);
        }
    }
    CHECK_THROWS_AS(rbf_kernel(x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rbf_kernel(x, -1.0), std::invalid_argument);
}

TEST_CASE("label_similarity basic shapes") {
    Matrix ones = label_similarity({4, 4, 4});
    for (std::size_t i = 0; i < ones.size(); ++i) CHECK(ones.data()[i] == 1.0);

    Matrix eye = label_similarity({1, 2, 3, 4});
    CHECK(eye == Matrix::identity(4));

    Matrix s = label_similarity({0, 7, 0});
    CHECK(s == Matrix::from_rows({{1, 0, 1}, {0, 1, 0}, {1, 0, 1}}));
}

TEST_CASE("simpson_similarity overlap cases and errors") {
    Matrix x(4, 6);
    // row 0: {1,2,3}; row 1: {2,3,4,5}; row 2: same as row 0; row 3: {0}
    for (std::size_t c : {1, 2, 3}) x(0, c) = 1.0;
    for (std::size_t c : {2, 3, 4, 5}) x(1, c) = 1.0;
    for (std::size_t c : {1, 2, 3}) x(2, c) = 1.0;
    x(3, 0) = 1.0;

    Matrix s = simpson_similarity(x);
    CHECK(bitwise_symmetric(s));
    CHECK(s(0, 2) == 1.0);                      // identical rows
    CHECK(s(0, 3) == 0.0);                      // disjoint supports
    CHECK(s(0, 1) == doctest::Approx(2.0 / 3.0));
    for (std::size_t i = 0; i < 4; ++i) CHECK(s(i, i) == 1.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.data()[i] >= 0.0);
        CHECK(s.data()[i] <= 1.0);
    }

    Matrix empty_row(2, 3);
    empty_row(0, 0) = 1.0;
    CHECK_THROWS_WITH_AS(simpson_similarity(empty_row), doctest::Contains("row 1"),
                         std::invalid_argument);
    Matrix non_binary(1, 2);
    non_binary(0, 0) = 0.5;
    CHECK_THROWS_AS(simpson_similarity(non_binary), std::invalid_argument);
}

TEST_CASE("binarize thresholds at the configured fraction of the max") {
    Matrix x = Matrix::from_rows({{0.0, 100.0, 51.0, 49.0}});
    Matrix b = binarize(x);
    CHECK(b(0, 0) == 0.0);
    CHECK(b(0, 1) == 1.0);
    CHECK(b(0, 2) == 1.0);
    CHECK(b(0, 3) == 0.0);
    CHECK_THROWS_AS(binarize(Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("center kills constants, is idempotent, matches the formula oracle") {
    Matrix constant(6, 6, 3.25);
    Matrix c = center(constant);
    CHECK(frobenius_sq(c) == 0.0);

    Matrix s = oracles::random_symmetric(20, 5);
    Matrix centered = center(s);

    // row and column sums vanish
    for (std::size_t i = 0; i < 20; ++i) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < 20; ++j) {
            row += centered(i, j);
            col += centered(j, i);
        }
        CHECK(std::abs(row) < 1e-9);
        CHECK(std::abs(col) < 1e-9);
    }

    Matrix twice = center(centered);
    double drift = 0.0;
    for (std::size_t i = 0; i < twice.size(); ++i)
        drift = std::max(drift, std::abs(twice.data()[i] - centered.data()[i]));
    CHECK(drift < 1e-12);

    // explicit formula oracle: S - 1S/m - S1/m + 1S1/m^2
    const std::size_t m = 20;
    double grand = 0.0;
    for (std::size_t t = 0; t < m; ++t)
        for (std::size_t u = 0; u < m; ++u) grand += s(t, u);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double rm = 0.0, cm = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                rm += s(i, t);
                cm += s(t, j);
            }
            const double expected = s(i, j) - rm / m - cm / m + grand / (m * m);
            CHECK(centered(i, j) == doctest::Approx(expected).epsilon(1e-10));
        }
    }

    CHECK(bitwise_symmetric(centered));
    CHECK_THROWS_AS(center(Matrix(3, 4)), std::invalid_argument);
}

TEST_CASE("normalize_range fixes the max-magnitude entry at 1") {
    Matrix already = Matrix::from_rows({{1.0, -0.5}, {-0.5, 0.25}});
    CHECK(normalize_range(already) == already);

    CHECK(normalize_range(scale(Matrix::identity(3), 2.0)) == Matrix::identity(3));

    Matrix r = oracles::random_matrix(7, 7, 9, -4.0, 4.0);
    Matrix n = normalize_range(r);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i)
        max_abs = std::max(max_abs, std::abs(n.data()[i]));
    CHECK(max_abs == 1.0);

    CHECK_THROWS_AS(normalize_range(Matrix(4, 4)), std::invalid_argument);
}

TEST_CASE("normalize_by_top_eigenvalue scales the spectrum to 1") {
    Matrix d = Matrix::from_rows({{4, 0}, {0, 2}});
    Matrix n = normalize_by_top_eigenvalue(d);
    CHECK(n(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(n(1, 1) == doctest::Approx(0.5).epsilon(1e-10));

    Matrix again = normalize_by_top_eigenvalue(n);
    double drift = 0.0;
    for (std::size_t i = 0; i < again.size(); ++i)
        drift = std::max(drift, std::abs(again.data()[i] - n.data()[i]));
    CHECK(drift < 1e-8);

    // random PSD: after normalization the top eigenvalue is 1
    Matrix z = oracles::random_matrix(30, 6, 10, -1.0, 1.0);
    Matrix psd = matmul_bt(z, z);
    Matrix np = normalize_by_top_eigenvalue(psd);
    EigenDecomposition top = eig_sym_topd(np, 1, EigCriterion::LargestMagnitude);
    CHECK(top.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-8));

    // eigenvector directions survive: reconstruction ratios match
    EigenDecomposition before = eig_sym_topd(psd, 3, EigCriterion::LargestPositive);
    EigenDecomposition after = eig_sym_topd(np, 3, EigCriterion::LargestPositive);
    for (std::size_t j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < 30; ++i)
            dot += before.eigenvectors(i, j) * after.eigenvectors(i, j);
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-6));
    }

    CHECK_THROWS_AS(normalize_by_top_eigenvalue(Matrix(5, 5)), std::invalid_argument);
}

TEST_CASE("random_mask contracts") {
    Matrix none = random_mask(12, 12, 0.0, 3);
    for (std::size_t i = 0; i < none.size(); ++i) CHECK(none.data()[i] == 1.0);

    Matrix mask = random_mask(500, 500, 0.9, 4);
    CHECK(bitwise_symmetric(mask));
    std::size_t observed = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask.data()[i] == 1.0) ++observed;
    const double fraction = static_cast<double>(observed) / (500.0 * 500.0);
    CHECK(fraction > 0.089);
    CHECK(fraction < 0.111);
    for (std::size_t i = 0; i < 500; ++i) CHECK(mask(i, i) == 1.0);

    CHECK(random_mask(40, 40, 0.5, 7) == random_mask(40, 40, 0.5, 7));
    CHECK_THROWS_AS(random_mask(10, 10, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(random_mask(10, 10, 1.5, 1), std::invalid_argument);
}

TEST_CASE("average_similarities") {
    Matrix s = oracles::random_symmetric(8, 11);
    Matrix single = average_similarities({s});
    CHECK(single == s);

    Matrix cancel = average_similarities({s, scale(s, -1.0)});
    CHECK(frobenius_sq(cancel) == 0.0);

    Matrix s2 = oracles::random_symmetric(8, 12);
    Matrix avg = average_similarities({s, s2});
    for (std::size_t i = 0; i < avg.size(); ++i)
        CHECK(avg.data()[i] ==
              doctest::Approx((s.data()[i] + s2.data()[i]) / 2.0).epsilon(1e-15));

    CHECK_THROWS_AS(average_similarities({}), std::invalid_argument);
    CHECK_THROWS_AS(average_similarities({s, Matrix(3, 3)}), std::invalid_argument);
}

TEST_CASE("TargetSpec validation") {
    Matrix s = oracles::random_symmetric(6, 13);
    TargetSpec square = TargetSpec::square(s);
    CHECK(square.k() == 1);
    CHECK(square.rows() == 6);

    Matrix bad = s;
    bad(0, 1) += 0.5;
    CHECK_THROWS_AS(TargetSpec::square(bad), std::invalid_argument);

    // asymmetric values are fine when the mask hides one side
    Matrix mask(6, 6, 1.0);
    mask(0, 1) = 0.0;
    TargetSpec masked = TargetSpec::square(bad, mask);
    CHECK(masked.mask.has_value());

    Matrix bad_mask(6, 6, 1.0);
    bad_mask(2, 2) = 0.5;
    CHECK_THROWS_AS(TargetSpec::square(s, bad_mask), std::invalid_argument);

    TargetSpec rect = TargetSpec::rectangular(Matrix(4, 7, 1.0));
    CHECK(rect.kind == TargetKind::Rectangular);
    CHECK(rect.cols() == 7);
}

TEST_CASE("median_heuristic_gamma is positive and deterministic") {
    Matrix x = oracles::random_matrix(30, 5, 14, -1.0, 1.0);
    const double g1 = median_heuristic_gamma(x);
    const double g2 = median_heuristic_gamma(x);
    CHECK(g1 == g2);
    CHECK(g1 > 0.0);
    CHECK_THROWS_AS(median_heuristic_gamma(Matrix(1, 3)), std::invalid_argument);
}
