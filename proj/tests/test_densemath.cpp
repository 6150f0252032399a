#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mired/densemath.hpp"
#include "mired/error.hpp"
#include "support.hpp"

using mired::DenseMatrix;

TEST_SUITE("densemath") {
  TEST_CASE("matmul identity and small product") {
    const DenseMatrix a = testing::random_matrix(3, 4, 1);
    CHECK(mired::matmul(DenseMatrix::identity(3), a) == a);
    const DenseMatrix p = mired::matmul({{1, 2}, {3, 4}}, {{0}, {1}});
    CHECK(p == DenseMatrix{{2}, {4}});
  }

  TEST_CASE("matmul matches triple loop") {
    const DenseMatrix a = testing::random_matrix(5, 7, 2);
    const DenseMatrix b = testing::random_matrix(7, 3, 3);
    CHECK(testing::max_abs_diff(mired::matmul(a, b), testing::naive_matmul(a, b)) <= 1e-12);
    CHECK(testing::max_abs_diff(mired::matmul_tn(a, a),
                                testing::naive_matmul(a.transposed(), a)) <= 1e-12);
    CHECK(testing::max_abs_diff(mired::matmul_nt(a, a),
                                testing::naive_matmul(a, a.transposed())) <= 1e-12);
  }

  TEST_CASE("matmul shape mismatch names both shapes") {
    try {
      mired::matmul(DenseMatrix(2, 3), DenseMatrix(2, 3));
      FAIL("expected ShapeError");
    } catch (const mired::ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("2x3") != std::string::npos);
    }
  }

  TEST_CASE("hadamard") {
    const DenseMatrix a = testing::random_matrix(3, 3, 4);
    CHECK(mired::hadamard(a, DenseMatrix(3, 3, 1.0)) == a);
    CHECK(mired::hadamard(a, DenseMatrix(3, 3, 0.0)) == DenseMatrix(3, 3, 0.0));
    CHECK(mired::hadamard({{2, 3}, {4, 5}}, {{1, 0}, {0, 1}}) == DenseMatrix{{2, 0}, {0, 5}});
    CHECK_THROWS_AS(mired::hadamard(DenseMatrix(2, 2), DenseMatrix(2, 3)), mired::ShapeError);
  }

  TEST_CASE("trace") {
    CHECK(mired::trace(DenseMatrix::identity(4)) == 4.0);
    CHECK(mired::trace(DenseMatrix(3, 3, 0.0)) == 0.0);
    CHECK(mired::trace({{1, 9}, {9, 2}}) == 3.0);
    CHECK_THROWS_AS(mired::trace(DenseMatrix(2, 3)), mired::ShapeError);
  }

  TEST_CASE("sym_eigen closed forms") {
    const auto d = mired::sym_eigen(DenseMatrix::diagonal(std::vector<double>{3, 1, 2}));
    CHECK(d.eigenvalues == std::vector<double>{3, 2, 1});
    // 2x2 [[a,b],[b,a]]: a +- b
    const auto e = mired::sym_eigen({{2, 1}, {1, 2}});
    CHECK(e.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("sym_eigen reconstruction, residuals and orthonormality") {
    const DenseMatrix r = testing::random_matrix(10, 10, 5);
    const DenseMatrix a = (r + r.transposed()) * 0.5;
    const auto eig = mired::sym_eigen(a);
    const std::size_t n = a.rows();
    CHECK(std::is_sorted(eig.eigenvalues.rbegin(), eig.eigenvalues.rend()));
    const DenseMatrix& v = eig.eigenvectors;
    const DenseMatrix recon = testing::naive_matmul(
        testing::naive_matmul(v, DenseMatrix::diagonal(eig.eigenvalues)), v.transposed());
    CHECK(testing::max_abs_diff(recon, a) <= 1e-8);
    CHECK(testing::max_abs_diff(testing::naive_matmul(v.transposed(), v),
                                DenseMatrix::identity(n)) <= 1e-9);
    const double norm_inf = mired::max_abs_row_sum(a);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        double av = 0.0;
        for (std::size_t j = 0; j < n; ++j) av += a(i, j) * v(j, k);
        CHECK(std::abs(av - eig.eigenvalues[k] * v(i, k)) <= 1e-9 * norm_inf);
      }
    }
    const double sum = std::accumulate(eig.eigenvalues.begin(), eig.eigenvalues.end(), 0.0);
    double sum_sq = 0.0;
    for (double l : eig.eigenvalues) sum_sq += l * l;
    CHECK(std::abs(sum - mired::trace(a)) <= 1e-9 * norm_inf);
    CHECK(std::abs(sum_sq - mired::frobenius_norm_sq(a)) <= 1e-9 * mired::frobenius_norm_sq(a));
  }

  TEST_CASE("sym_eigen permutation invariance") {
    const DenseMatrix r = testing::random_matrix(8, 8, 6);
    const DenseMatrix a = (r + r.transposed()) * 0.5;
    std::vector<std::size_t> perm = {3, 7, 0, 5, 1, 6, 2, 4};
    DenseMatrix p(8, 8);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) p(i, j) = a(perm[i], perm[j]);
    const auto ea = mired::sym_eigen(a).eigenvalues;
    const auto ep = mired::sym_eigen(p).eigenvalues;
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(ea[i] - ep[i]) <= 1e-9);
  }

  TEST_CASE("sym_eigen rejects bad input") {
    CHECK_THROWS_AS(mired::sym_eigen(DenseMatrix(2, 3)), mired::ShapeError);
    CHECK_THROWS_AS(mired::sym_eigen({{1, 2}, {0, 1}}), mired::ValueError);
    const DenseMatrix r = testing::random_matrix(12, 12, 7);
    CHECK_THROWS_AS(mired::sym_eigen((r + r.transposed()) * 0.5, 1e-14, 1),
                    mired::ConvergenceError);
  }

  TEST_CASE("covariance") {
    CHECK(mired::covariance(DenseMatrix(4, 3, 2.5)) == DenseMatrix(3, 3, 0.0));
    CHECK(mired::covariance({{0, 0}, {2, 2}}) == DenseMatrix{{2, 2}, {2, 2}});
    CHECK_THROWS_AS(mired::covariance(DenseMatrix(1, 3)), mired::ValueError);
    const DenseMatrix x = testing::random_matrix(50, 6, 8);
    const DenseMatrix c = mired::covariance(x);
    CHECK(testing::max_abs_diff(c, c.transposed()) == 0.0);
    for (double l : mired::sym_eigen(c).eigenvalues) CHECK(l >= -1e-10);
    // Entry-loop oracle.
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        double mi = 0, mj = 0;
        for (std::size_t r = 0; r < 50; ++r) mi += x(r, i), mj += x(r, j);
        mi /= 50, mj /= 50;
        double s = 0;
        for (std::size_t r = 0; r < 50; ++r) s += (x(r, i) - mi) * (x(r, j) - mj);
        CHECK(c(i, j) == doctest::Approx(s / 49).epsilon(1e-12));
      }
  }

  TEST_CASE("frobenius_distance_sq") {
    const DenseMatrix a = testing::random_matrix(3, 4, 9);
    const DenseMatrix b = testing::random_matrix(3, 4, 10);
    CHECK(mired::frobenius_distance_sq(a, a) == 0.0);
    CHECK(mired::frobenius_distance_sq(DenseMatrix::identity(2), DenseMatrix(2, 2, 0.0)) == 2.0);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(a.data()[i] - b.data()[i], 2);
    CHECK(mired::frobenius_distance_sq(a, b) == doctest::Approx(s).epsilon(1e-14));
  }

  TEST_CASE("operations are deterministic") {
    const DenseMatrix a = testing::random_matrix(20, 20, 11);
    const DenseMatrix s = (a + a.transposed()) * 0.5;
    CHECK(mired::matmul(a, a) == mired::matmul(a, a));
    CHECK(mired::sym_eigen(s).eigenvalues == mired::sym_eigen(s).eigenvalues);
  }
}
