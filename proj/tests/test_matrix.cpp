#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "simecs/matrix.hpp"
#include "simecs/rng.hpp"

using namespace simecs;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST_CASE("matmul identity and hand-checked products") {
    Matrix m = oracles::random_matrix(3, 5, 11);
    CHECK(max_abs_diff(matmul(Matrix::identity(3), m), m) == 0.0);

    Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    Matrix b = Matrix::from_rows({{1}, {1}});
    Matrix c = matmul(a, b);
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 1);
    CHECK(c(0, 0) == doctest::Approx(3.0));
    CHECK(c(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Matrix a = oracles::random_matrix(5, 4, 21);
    Matrix b = oracles::random_matrix(4, 3, 22);
    CHECK(max_abs_diff(matmul(a, b), oracles::naive_matmul(a, b)) < 1e-13);
}

TEST_CASE("matmul rejects mismatched shapes, naming both") {
    Matrix a(2, 3), b(4, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("4x2"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random small matrices") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Matrix a = oracles::random_matrix(4, 6, 100 + seed);
        Matrix b = oracles::random_matrix(6, 3, 200 + seed);
        Matrix c = oracles::random_matrix(3, 5, 300 + seed);
        Matrix left = matmul(matmul(a, b), c);
        Matrix right = matmul(a, matmul(b, c));
        double scale = std::sqrt(frobenius_sq(left)) + 1e-30;
        CHECK(max_abs_diff(left, right) / scale < 1e-10);
    }
}

TEST_CASE("matmul_at and matmul_bt agree with explicit transposes") {
    Matrix a = oracles::random_matrix(7, 4, 31);
    Matrix b = oracles::random_matrix(7, 5, 32);
    CHECK(max_abs_diff(matmul_at(a, b), oracles::naive_matmul(transpose(a), b)) < 1e-13);
    Matrix c = oracles::random_matrix(6, 4, 33);
    CHECK(max_abs_diff(matmul_bt(a, c), oracles::naive_matmul(a, transpose(c))) < 1e-13);
}

TEST_CASE("matmul is deterministic across the threaded path") {
    // large enough to trigger the two-thread split
    Matrix a = oracles::random_matrix(220, 200, 41);
    Matrix b = oracles::random_matrix(200, 180, 42);
    Matrix c1 = matmul(a, b);
    Matrix c2 = matmul(a, b);
    CHECK(c1 == c2);
    Matrix ref = oracles::naive_matmul(a, b);
    double scale = std::sqrt(frobenius_sq(ref)) + 1e-30;
    CHECK(max_abs_diff(c1, ref) / scale < 1e-12);
}

TEST_CASE("transpose involution, symmetry, hand case") {
    Matrix m = oracles::random_matrix(4, 7, 51);
    CHECK(transpose(transpose(m)) == m);

    Matrix s = oracles::random_symmetric(5, 52);
    CHECK(transpose(s) == s);

    Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    Matrix at = transpose(a);
    CHECK(at.rows() == 3);
    CHECK(at.cols() == 2);
    CHECK(at(0, 1) == 4.0);
    CHECK(at(2, 0) == 3.0);

    CHECK(frobenius_sq(transpose(m)) == frobenius_sq(m));
}

TEST_CASE("frobenius_sq basics and elementwise oracle") {
    CHECK(frobenius_sq(Matrix(3, 4)) == 0.0);
    CHECK(frobenius_sq(Matrix::identity(4)) == 4.0);

    Matrix m = oracles::random_matrix(6, 6, 61);
    double acc = 0.0;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) acc += m(i, j) * m(i, j);
    CHECK(frobenius_sq(m) == doctest::Approx(acc).epsilon(1e-14));

    double rel = std::abs(frobenius_sq(m) - masked_mse(m, Matrix(6, 6)) * 36.0) /
                 frobenius_sq(m);
    CHECK(rel < 1e-12);
}

TEST_CASE("masked_mse equality, hand case, loop oracle, errors") {
    Matrix a = oracles::random_matrix(4, 4, 71);
    CHECK(masked_mse(a, a) == 0.0);

    Matrix eye = Matrix::identity(2);
    Matrix zero(2, 2);
    CHECK(masked_mse(eye, zero, &eye) == doctest::Approx(1.0));

    Matrix x = oracles::random_matrix(8, 5, 72);
    Matrix y = oracles::random_matrix(8, 5, 73);
    Matrix mask(8, 5);
    simecs::Rng rng(74);
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask.data()[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (mask.data()[i] != 1.0) continue;
        const double d = x.data()[i] - y.data()[i];
        acc += d * d;
        ++count;
    }
    REQUIRE(count > 0);
    CHECK(masked_mse(x, y, &mask) ==
          doctest::Approx(acc / static_cast<double>(count)).epsilon(1e-14));

    Matrix all_zero(8, 5);
    CHECK_THROWS_WITH_AS(masked_mse(x, y, &all_zero),
                         doctest::Contains("no observed entries"), std::invalid_argument);
    Matrix wrong(3, 3);
    CHECK_THROWS_AS(masked_mse(x, wrong), std::invalid_argument);
}
