#include <doctest.h>

#include <cmath>

#include "mired/error.hpp"
#include "mired/kernelinfo.hpp"
#include "mired/objectives.hpp"
#include "support.hpp"

using mired::DenseMatrix;
using mired::ObjectiveKind;
using mired::ObjectiveSpec;

namespace {

// V-statistic MMD straight from the definition.
double mmd_oracle(const DenseMatrix& a, const DenseMatrix& b, double sigma) {
  auto k = [&](const DenseMatrix& p, std::size_t i, const DenseMatrix& q, std::size_t j) {
    double d2 = 0;
    for (std::size_t c = 0; c < p.cols(); ++c) d2 += std::pow(p(i, c) - q(j, c), 2);
    return std::exp(-d2 / (2 * sigma * sigma));
  };
  double aa = 0, bb = 0, ab = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.rows(); ++j) aa += k(a, i, a, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) bb += k(b, i, b, j);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) ab += k(a, i, b, j);
  const double n = double(a.rows()), m = double(b.rows());
  return aa / (n * n) + bb / (m * m) - 2 * ab / (n * m);
}

DenseMatrix cov_oracle(const DenseMatrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c) / double(n);
  DenseMatrix out(d, d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t r = 0; r < n; ++r) out(i, j) += (x(r, i) - mean[i]) * (x(r, j) - mean[j]);
      out(i, j) /= double(n - 1);
    }
  return out;
}

double coral_oracle(const DenseMatrix& a, const DenseMatrix& b) {
  const auto ca = cov_oracle(a), cb = cov_oracle(b);
  double s = 0;
  for (std::size_t i = 0; i < ca.size(); ++i) s += std::pow(ca.data()[i] - cb.data()[i], 2);
  return s;
}

mired::MlpModel small_model(std::uint64_t seed) {
  const std::size_t dims[] = {5, 4, 2};
  return mired::init_model(mired::encoder_topology(dims, mired::Activation::tanh), 2, seed);
}

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("mmd zero case and oracle") {
    const auto a = testing::random_matrix(6, 3, 1);
    const auto b = testing::random_matrix(4, 3, 2);
    CHECK(std::abs(mired::mmd(a, a, 1.0)) <= 1e-12);
    CHECK(mired::mmd(a, b, 0.7) == doctest::Approx(mmd_oracle(a, b, 0.7)).epsilon(1e-12));
    CHECK(mired::mmd_with_gradient(a, b, 0.7).value ==
          doctest::Approx(mired::mmd(a, b, 0.7)).epsilon(1e-14));
  }

  TEST_CASE("coral zero case and oracle") {
    const auto a = testing::random_matrix(7, 3, 3);
    const auto b = testing::random_matrix(9, 3, 4);
    CHECK(std::abs(mired::coral_distance(a, a)) <= 1e-12);
    CHECK(mired::coral_distance(a, b) == doctest::Approx(coral_oracle(a, b)).epsilon(1e-12));
  }

  TEST_CASE("nsae second reconstruction vanishes for an identity autoencoder") {
    const std::size_t dims[] = {3, 3};
    auto m = mired::init_model(mired::encoder_topology(dims), 2, 0);
    m.encoder[0].weights = DenseMatrix::identity(3);
    m.decoder[0].weights = DenseMatrix::identity(3);
    const auto x = testing::random_matrix(5, 3, 5);
    const int y[] = {0, 1, 0, 1, 1};
    ObjectiveSpec spec;
    spec.kind = ObjectiveKind::nsae;
    const auto loss = mired::assemble_loss(spec, m, x, y);
    CHECK(std::abs(loss.reg) <= 1e-12);
    CHECK(std::abs(loss.rec) <= 1e-12);
  }

  TEST_CASE("loss composition per kind") {
    const auto m = small_model(1);
    const auto x = testing::random_matrix(8, 5, 6);
    const int y[] = {0, 1, 1, 0, 1, 0, 0, 1};
    mired::BatchPartition part{{0, 1, 2, 3}, {4, 5, 6, 7}};
    for (auto kind : {ObjectiveKind::mtls_red, ObjectiveKind::dmtae, ObjectiveKind::mmd_ae,
                      ObjectiveKind::coral, ObjectiveKind::nsae}) {
      ObjectiveSpec spec;
      spec.kind = kind;
      const auto loss = mired::assemble_loss(spec, m, x, y, part);
      CHECK(loss.total == doctest::Approx(loss.ce + loss.w_rec * loss.rec + loss.w_reg * loss.reg)
                              .epsilon(1e-14));
      CHECK(loss.w_rec == 0.6);
      const auto g = mired::backward(m, x, y, spec, part);
      CHECK(g.loss.total == loss.total);
    }
    ObjectiveSpec dm;
    dm.kind = ObjectiveKind::dmtae;
    CHECK(mired::assemble_loss(dm, m, x, y).w_reg == 0.0);
  }

  TEST_CASE("mtls_red reg is the MI of the batch in bits") {
    const auto m = small_model(2);
    const auto x = testing::random_matrix(10, 5, 7);
    const int y[] = {0, 1, 1, 0, 1, 0, 0, 1, 1, 0};
    ObjectiveSpec spec;
    spec.kernel.bandwidth = 1.5;
    spec.bandwidth_latent = 0.8;
    const auto loss = mired::assemble_loss(spec, m, x, y);
    const auto gx = mired::normalize_gram(mired::rbf_gram(x, 1.5));
    const auto gz = mired::normalize_gram(mired::rbf_gram(mired::encode(m, x), 0.8));
    CHECK(std::abs(loss.reg - mired::mutual_information(gx, gz)) <= 1e-10);
    CHECK(loss.w_reg == 2.0);
  }

  TEST_CASE("validation and partition errors") {
    ObjectiveSpec spec;
    spec.beta = -1;
    CHECK_THROWS_AS(spec.validate(), mired::ValueError);
    spec = ObjectiveSpec{};
    spec.kernel.alpha = 3.0;
    CHECK_THROWS_AS(spec.validate(), mired::ValueError);
    spec = ObjectiveSpec{};
    spec.kind = ObjectiveKind::coral;
    const auto m = small_model(3);
    const auto x = testing::random_matrix(4, 5, 8);
    const int y[] = {0, 1, 0, 1};
    CHECK_THROWS_AS(mired::assemble_loss(spec, m, x, y, {{0}, {1, 2, 3}}), mired::ValueError);
    CHECK_THROWS_AS(mired::assemble_loss(spec, m, x, y, {{0, 9}, {1, 2}}), mired::ShapeError);
    CHECK_THROWS_AS(mired::objective_from_string("vae"), mired::ValueError);
  }
}
