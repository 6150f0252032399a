#include <doctest.h>

#include <cmath>

#include "mired/error.hpp"
#include "mired/evalreport.hpp"
#include "mired/kernelinfo.hpp"
#include "support.hpp"

using mired::DenseMatrix;
using mired::DomainDataset;
using mired::Role;

namespace {

// Identity encoder/head on 2 features: predicts argmax of the row.
mired::MlpModel argmax_model() {
  const std::size_t dims[] = {2, 2};
  auto m = mired::init_model(mired::encoder_topology(dims), 2, 0);
  m.encoder[0].weights = DenseMatrix::identity(2);
  m.head.weights = DenseMatrix::identity(2);
  return m;
}

DomainDataset labelled(const std::string& name, Role role, std::size_t n, std::uint64_t seed) {
  DomainDataset ds;
  ds.name = name;
  ds.role = role;
  ds.features = DenseMatrix(n, 2);
  ds.feature_names = {"a", "b"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = int(i % 2);
    ds.labels.push_back(y);
    ds.features(i, 0) = (y == 0 ? 3.0 : 0.0) + noise(rng);
    ds.features(i, 1) = (y == 1 ? 3.0 : 0.0) + noise(rng);
  }
  return ds;
}

}  // namespace

TEST_SUITE("evalreport") {
  TEST_CASE("perfect classifier") {
    const std::vector<DomainDataset> data{labelled("s", Role::source, 20, 1),
                                          labelled("o", Role::ood, 10, 2)};
    const auto r = mired::evaluate(argmax_model(), data, {1, 1, 2, 5});
    CHECK(r.recalls.size() == 4);
    for (const auto& c : r.recalls) CHECK(c.recall == 1.0);
    REQUIRE(r.roles.size() == 2);
    CHECK(r.roles[0].role == Role::source);
    CHECK(r.roles[1].role == Role::ood);
    CHECK(r.role(Role::ood)->accuracy == 1.0);
    CHECK(r.role(Role::cross) == nullptr);
    CHECK(r.confusion[0].counts == std::vector<std::vector<std::size_t>>{{10, 0}, {0, 10}});
    CHECK(r.mi_batches == 6);
  }

  TEST_CASE("constant predictor") {
    auto m = argmax_model();
    m.head.weights = DenseMatrix(2, 2, 0.0);
    m.head.bias = {1.0, 0.0};
    const std::vector<DomainDataset> data{labelled("s", Role::source, 10, 3)};
    const auto r = mired::evaluate(m, data, {});
    CHECK(r.recalls[0].recall == 1.0);
    CHECK(r.recalls[1].recall == 0.0);
    CHECK(r.roles[0].accuracy == 0.5);
    CHECK(r.mi_batches == 0);
    CHECK(r.mean_mi_bits == 0.0);
  }

  TEST_CASE("role accuracy is the support-weighted recall") {
    const std::size_t dims[] = {2, 2};
    const auto m = mired::init_model(mired::encoder_topology(dims), 2, 7);
    const std::vector<DomainDataset> data{labelled("s0", Role::source, 30, 4),
                                          labelled("s1", Role::source, 17, 5)};
    const auto r = mired::evaluate(m, data, {});
    double num = 0, den = 0;
    for (const auto& c : r.recalls) num += c.recall * double(c.support), den += double(c.support);
    CHECK(r.roles[0].accuracy == doctest::Approx(num / den).epsilon(1e-14));
    CHECK(r.roles[0].support == 47);
  }

  TEST_CASE("MI is recomputed per full batch") {
    const std::size_t dims[] = {2, 3};
    const auto m = mired::init_model(mired::encoder_topology(dims), 2, 8);
    const std::vector<DomainDataset> data{labelled("s", Role::source, 25, 6)};
    const auto r = mired::evaluate(m, data, {0.7, 1.3, 2, 10});
    REQUIRE(r.batch_mi_bits.size() == 2);
    for (std::size_t b = 0; b < 2; ++b) {
      DenseMatrix x(10, 2);
      for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t c = 0; c < 2; ++c) x(i, c) = data[0].features(b * 10 + i, c);
      const auto gx = mired::normalize_gram(mired::rbf_gram(x, 0.7));
      const auto gz = mired::normalize_gram(mired::rbf_gram(mired::encode(m, x), 1.3));
      CHECK(std::abs(r.batch_mi_bits[b] - mired::mutual_information(gx, gz)) <= 1e-12);
    }
    CHECK(r.mean_mi_bits ==
          doctest::Approx((r.batch_mi_bits[0] + r.batch_mi_bits[1]) / 2).epsilon(1e-14));
  }

  TEST_CASE("constant latent carries no information") {
    auto m = argmax_model();
    m.encoder[0].weights = DenseMatrix(2, 2, 0.0);
    const std::vector<DomainDataset> data{labelled("s", Role::source, 20, 9)};
    const auto r = mired::evaluate(m, data, {1, 1, 2, 10});
    CHECK(std::abs(r.mean_mi_bits) <= 1e-12);
  }

  TEST_CASE("correlation matrix") {
    DomainDataset ds;
    ds.features = testing::random_matrix(5000, 3, 10);
    for (std::size_t r = 0; r < 5000; ++r) ds.features(r, 2) = ds.features(r, 0);
    const auto c = mired::correlation_matrix(ds);
    CHECK(c(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(c(0, 1)) < 0.05);
    CHECK(c(1, 1) == doctest::Approx(1.0));

    DomainDataset k;
    k.features = DenseMatrix{{1, 4}, {2, 4}, {3, 4}};
    const auto ck = mired::correlation_matrix(k);
    CHECK(ck(0, 1) == 0.0);
    CHECK(ck(1, 1) == 1.0);
  }

  TEST_CASE("compare runs") {
    const std::vector<DomainDataset> data{labelled("s", Role::source, 20, 11),
                                          labelled("o", Role::ood, 20, 12)};
    const auto good = mired::evaluate(argmax_model(), data, {});
    auto bad_model = argmax_model();
    bad_model.head.weights = DenseMatrix{{0, 1}, {1, 0}};
    const auto bad = mired::evaluate(bad_model, data, {});
    const auto same = mired::compare_runs(good, good);
    for (const auto& c : same.cells) CHECK(c.delta == 0.0);
    const auto diff = mired::compare_runs(good, bad);
    for (const auto& c : diff.cells) CHECK(c.delta == 1.0);
    REQUIRE(diff.roles.size() == 2);
    CHECK(diff.roles[1].role == Role::ood);
    CHECK(diff.roles[1].mean_delta == 1.0);

    auto other = bad;
    other.class_names = {"x", "y"};
    auto named = good;
    named.class_names = {"a", "b"};
    CHECK_THROWS(mired::compare_runs(named, other));
  }

  TEST_CASE("report serialization") {
    const std::vector<DomainDataset> data{labelled("s", Role::source, 20, 13)};
    auto r = mired::evaluate(argmax_model(), data, {});
    r.runtime_seconds = 12.5;
    const std::string json = r.to_json();
    CHECK(json.find("per-class recall") != std::string::npos);
    CHECK(json.find("12.5") == std::string::npos);
    CHECK(r.recalls_csv().rfind("domain,", 0) == 0);
    const auto dir = testing::temp_dir("report");
    mired::write_report(r, dir);
    for (const char* f : {"report.json", "recalls.csv", "roles.csv", "confusion.csv"})
      CHECK(std::filesystem::exists(dir / f));
  }
}
