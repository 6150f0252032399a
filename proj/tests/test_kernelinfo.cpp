#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mired/error.hpp"
#include "mired/kernelinfo.hpp"
#include "support.hpp"

using mired::DenseMatrix;
using mired::GramMatrix;

namespace {

GramMatrix gram_of(const DenseMatrix& x, double sigma) {
  return mired::normalize_gram(mired::rbf_gram(x, sigma));
}

// Oracle: bits from the definition, summing squared entries directly.
double h2_oracle(const DenseMatrix& k) {
  double s = 0.0;
  for (double v : k.data()) s += v * v;
  return -std::log2(s);
}

}  // namespace

TEST_SUITE("kernelinfo") {
  TEST_CASE("rbf_gram matches the definition and rejects bad input") {
    const auto x = testing::random_matrix(6, 3, 1);
    CHECK(testing::max_abs_diff(mired::rbf_gram(x, 1.3), testing::naive_rbf(x, 1.3)) <= 1e-14);
    CHECK_THROWS_AS(mired::rbf_gram(x, 0.0), mired::ValueError);
    CHECK_THROWS_AS(mired::rbf_gram(x, -1.0), mired::ValueError);
    CHECK_THROWS(mired::rbf_gram(DenseMatrix(0, 3), 1.0));
  }

  TEST_CASE("normalize_gram gives trace 1 and diagonal 1/l") {
    const auto g = gram_of(testing::random_matrix(7, 2, 2), 0.9);
    CHECK(mired::trace(g.matrix()) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < 7; ++i) CHECK(g.matrix()(i, i) == 1.0 / 7.0);
    CHECK_THROWS_AS(mired::normalize_gram(DenseMatrix{{1, 0}, {0, 0}}), mired::ValueError);
  }

  TEST_CASE("from_normalized checks invariants") {
    CHECK_NOTHROW(GramMatrix::from_normalized(DenseMatrix::identity(3) * (1.0 / 3.0)));
    CHECK_THROWS(GramMatrix::from_normalized(DenseMatrix::identity(3)));
    CHECK_THROWS(GramMatrix::from_normalized(DenseMatrix{{0.5, 0.1}, {0.2, 0.5}}));
  }

  TEST_CASE("closed-form entropies") {
    for (std::size_t l : {2u, 5u, 16u, 64u}) {
      const auto id = GramMatrix::from_normalized(DenseMatrix::identity(l) * (1.0 / double(l)));
      CHECK(std::abs(mired::renyi_entropy(id).value - std::log2(double(l))) <= 1e-12);
      const auto ones = GramMatrix::from_normalized(DenseMatrix(l, l, 1.0 / double(l)));
      CHECK(std::abs(mired::renyi_entropy(ones).value) <= 1e-12);
    }
    const auto two = GramMatrix::from_normalized({{0.5, 0.3}, {0.3, 0.5}});
    CHECK(std::abs(mired::renyi_entropy(two).value + std::log2(0.68)) <= 1e-12);
    CHECK(std::abs(mired::renyi_entropy_eigen(two, 2.0).value + std::log2(0.68)) <= 1e-12);
  }

  TEST_CASE("trace and eigen paths agree, entropy bounded") {
    for (std::uint64_t s = 0; s < 30; ++s) {
      const std::size_t l = 4 + s;
      const auto g = gram_of(testing::random_matrix(l, 3, 100 + s), 0.5 + 0.1 * double(s));
      const double h = mired::renyi_entropy(g).value;
      CHECK(std::abs(h - mired::renyi_entropy_eigen(g, 2.0).value) <= 1e-10);
      CHECK(std::abs(h - h2_oracle(g.matrix())) <= 1e-12);
      CHECK(h >= 0.0);
      CHECK(h <= std::log2(double(l)) + 1e-12);
      CHECK(mired::renyi_entropy(g).information_potential ==
            doctest::Approx(std::exp2(-h)).epsilon(1e-12));
    }
  }

  TEST_CASE("other alpha goes through eigenvalues") {
    const auto id = GramMatrix::from_normalized(DenseMatrix::identity(8) * 0.125);
    CHECK(mired::renyi_entropy(id, 3.0).value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(mired::renyi_entropy(id, 0.5).value == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("joint entropy and mutual information") {
    const auto x = testing::random_matrix(12, 4, 3);
    const auto gx = gram_of(x, 1.0);
    // Joint entropy oracle: Hadamard product renormalized by its trace.
    DenseMatrix h = mired::hadamard(gx.matrix(), gx.matrix());
    const double t = mired::trace(h);
    h = h * (1.0 / t);
    CHECK(mired::joint_entropy(gx, gx).value == doctest::Approx(h2_oracle(h)).epsilon(1e-12));

    // Constant latent: MI vanishes.
    const auto gz = gram_of(DenseMatrix(12, 2, 0.7), 1.0);
    CHECK(std::abs(mired::mutual_information(gx, gz)) <= 1e-9);
    // MI is symmetric and nonnegative for RBF Grams.
    const auto gz2 = gram_of(testing::random_matrix(12, 2, 4), 0.8);
    const double mi = mired::mutual_information(gx, gz2);
    CHECK(mi == doctest::Approx(mired::mutual_information(gz2, gx)).epsilon(1e-12));
    CHECK(mi >= -1e-12);
  }

  TEST_CASE("entropy gradient and MI gradient shapes") {
    const auto x = testing::random_matrix(6, 3, 5);
    const auto g = gram_of(x, 1.0);
    const auto grad = mired::grad_entropy_wrt_gram(g);
    double s = 0.0;
    for (double v : g.matrix().data()) s += v * v;
    for (std::size_t i = 0; i < g.matrix().size(); ++i)
      CHECK(grad.data()[i] == doctest::Approx(-2.0 * g.matrix().data()[i] / s).epsilon(1e-14));

    const auto z = testing::random_matrix(6, 2, 6);
    const auto mg = mired::mi_with_latent_gradient(g, z, 0.9);
    CHECK(mg.grad_latent.rows() == 6);
    CHECK(mg.grad_latent.cols() == 2);
    CHECK(mg.mi_nats ==
          doctest::Approx(mired::mutual_information(g, gram_of(z, 0.9)) * std::numbers::ln2)
              .epsilon(1e-12));
    CHECK(mired::grad_mi_wrt_latent(x, z, 1.0, 0.9) == mg.grad_latent);
  }
}
