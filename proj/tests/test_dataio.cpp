#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "mired/error.hpp"
#include "mired/dataio.hpp"
#include "mired/textio.hpp"
#include "support.hpp"

using mired::DenseMatrix;
using mired::DomainDataset;
using mired::Role;

namespace {

// Least-squares linear probe (with intercept) solved by Gaussian elimination.
std::vector<double> fit_probe(const std::vector<const DomainDataset*>& train) {
  const std::size_t d = train.front()->features.cols() + 1;
  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (const auto* ds : train) {
    for (std::size_t r = 0; r < ds->rows(); ++r) {
      std::vector<double> x(d, 1.0);
      for (std::size_t c = 0; c + 1 < d; ++c) x[c] = ds->features(r, c);
      const double y = ds->labels[r] == 1 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) a[i][j] += x[i] * x[j];
        a[i][d] += x[i] * y;
      }
    }
  }
  for (std::size_t p = 0; p < d; ++p) {
    std::size_t best = p;
    for (std::size_t r = p + 1; r < d; ++r)
      if (std::abs(a[r][p]) > std::abs(a[best][p])) best = r;
    std::swap(a[p], a[best]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == p) continue;
      const double f = a[r][p] / a[p][p];
      for (std::size_t c = p; c <= d; ++c) a[r][c] -= f * a[p][c];
    }
  }
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = a[i][d] / a[i][i];
  return w;
}

double probe_accuracy(const std::vector<double>& w, const DomainDataset& ds) {
  std::size_t ok = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    double s = w.back();
    for (std::size_t c = 0; c + 1 < w.size(); ++c) s += w[c] * ds.features(r, c);
    ok += (s > 0) == (ds.labels[r] == 1);
  }
  return double(ok) / double(ds.rows());
}

double pearson(const DomainDataset& ds, std::size_t col) {
  double mx = 0, my = 0;
  const double n = double(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) mx += ds.features(r, col), my += ds.labels[r];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double a = ds.features(r, col) - mx, b = ds.labels[r] - my;
    sxy += a * b, sxx += a * a, syy += b * b;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_SUITE("dataio") {
  TEST_CASE("three-row csv") {
    const auto dir = testing::temp_dir("csv3");
    mired::text::write_file(dir / "lab.csv", "a, b ,label\n1,2,0\n3,4,1\n5,6,1\n");
    const auto r = mired::load_csv(dir / "lab.csv", "label", std::nullopt);
    REQUIRE(r.datasets.size() == 1);
    const auto& ds = r.datasets[0];
    CHECK(ds.name == "lab");
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.features == DenseMatrix{{1, 2}, {3, 4}, {5, 6}});
    CHECK(ds.labels == std::vector<int>{0, 1, 1});
    CHECK(r.dropped_rows == 0);
  }

  TEST_CASE("bad rows are dropped and counted") {
    const auto dir = testing::temp_dir("csvbad");
    mired::text::write_file(dir / "x.csv",
                            "a,b,label,dom\n1,2,A,d1\nnan,2,B,d1\n1,2,B\n3,inf,A,d2\n4,5,B,d2\n");
    const auto r = mired::load_csv(dir / "x.csv", "label", std::string("dom"));
    CHECK(r.dropped_rows == 3);
    REQUIRE(r.datasets.size() == 2);
    CHECK(r.datasets[0].name == "d1");
    CHECK(r.datasets[1].name == "d2");
    CHECK(r.class_names == std::vector<std::string>{"A", "B"});
    CHECK(r.datasets[1].labels == std::vector<int>{1});
    CHECK_THROWS(mired::load_csv(dir / "x.csv", "nolabel", std::nullopt));
  }

  TEST_CASE("79-feature fixture") {
    const std::filesystem::path p =
        std::filesystem::path(MIRED_SOURCE_DIR) / "data/fixtures/cic_ids2018.csv";
    const auto r = mired::load_csv(p, "Label", std::string("Domain"));
    REQUIRE(r.datasets.size() == 4);
    for (const auto& ds : r.datasets) {
      CHECK(ds.features.cols() == 79);
      CHECK(ds.rows() == 240);
    }
  }

  TEST_CASE("standardizer") {
    const auto st = mired::fit_standardizer(DenseMatrix{{0}, {10}});
    CHECK(st.apply(DenseMatrix{{0}, {10}}) == DenseMatrix{{-1}, {1}});

    const auto x = testing::random_matrix(200, 4, 3, 5.0);
    const auto s = mired::fit_standardizer(x);
    const auto z = s.apply(x);
    for (std::size_t c = 0; c < 4; ++c) {
      double m = 0, v = 0;
      for (std::size_t r = 0; r < 200; ++r) m += z(r, c);
      m /= 200;
      for (std::size_t r = 0; r < 200; ++r) v += (z(r, c) - m) * (z(r, c) - m);
      CHECK(std::abs(m) <= 1e-9);
      CHECK(std::abs(std::sqrt(v / 200) - 1.0) <= 1e-9);
    }

    const auto c = mired::fit_standardizer(DenseMatrix{{1, 7}, {2, 7}, {3, 7}});
    CHECK(c.constant == std::vector<bool>{false, true});
    CHECK(c.stddev[1] == 1.0);
    CHECK(c.apply(DenseMatrix{{2, 7}})(0, 1) == 0.0);
  }

  TEST_CASE("standardizer ignores the evaluation data") {
    auto spec = mired::SynthSpec{};
    spec.n_per_domain = 200;
    auto domains = mired::generate_synthetic(spec);
    const auto st = mired::fit_standardizer(domains[0].features);
    const auto copy = st;
    for (auto& ds : domains)
      if (ds.role == Role::ood)
        for (double& v : ds.features.data()) v = v * 100 + 3;
    const auto applied = st.apply(domains.back());
    CHECK(st == copy);
    CHECK(applied.features.rows() == 200);
  }

  TEST_CASE("split sizes and determinism") {
    mired::SynthSpec spec;
    spec.n_per_domain = 101;
    const auto ds = mired::generate_synthetic(spec)[0];
    const auto [tr, te] = mired::split_dataset(ds, 0.2, 4);
    CHECK(te.rows() == 20);
    CHECK(tr.rows() == 81);
    const auto [tr2, te2] = mired::split_dataset(ds, 0.2, 4);
    CHECK(te2.features == te.features);
  }

  TEST_CASE("synthetic data carries a flipping spurious cue") {
    const mired::SynthSpec spec;
    const auto domains = mired::generate_synthetic(spec);
    REQUIRE(domains.size() == 5);
    CHECK(domains[0].name == "source_0");
    CHECK(domains[2].name == "cross_0");
    CHECK(domains[3].name == "ood_0");
    CHECK(domains[3].role == Role::ood);

    const auto w = fit_probe({&domains[0], &domains[1]});
    double sig = 0, spur = 0;
    for (std::size_t k = 0; k < spec.signal_dims; ++k) sig += w[k] * w[k];
    for (std::size_t k = 0; k < spec.spurious_dims; ++k)
      spur += w[spec.signal_dims + k] * w[spec.signal_dims + k];
    CHECK(std::sqrt(spur) > std::sqrt(sig));
    CHECK(probe_accuracy(w, domains[0]) > 0.85);
    CHECK(probe_accuracy(w, domains[1]) > 0.85);
    CHECK(probe_accuracy(w, domains[3]) < 0.5);
    CHECK(probe_accuracy(w, domains[4]) < 0.5);

    // The strongest spurious column changes sign between a source domain and its OOD twin.
    std::size_t best = spec.signal_dims;
    for (std::size_t k = 0; k < spec.spurious_dims; ++k)
      if (std::abs(pearson(domains[0], spec.signal_dims + k)) >
          std::abs(pearson(domains[0], best)))
        best = spec.signal_dims + k;
    CHECK(pearson(domains[0], best) * pearson(domains[3], best) < 0);
    // Signal columns keep their sign everywhere.
    for (std::size_t k = 0; k < spec.signal_dims; ++k) {
      if (std::abs(pearson(domains[0], k)) < 0.1) continue;
      CHECK(pearson(domains[0], k) * pearson(domains[3], k) > 0);
    }
  }

  TEST_CASE("synthetic generation is deterministic") {
    mired::SynthSpec spec;
    spec.n_per_domain = 50;
    const auto a = mired::generate_synthetic(spec);
    const auto b = mired::generate_synthetic(spec);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].features == b[i].features);
      CHECK(a[i].labels == b[i].labels);
    }
    spec.seed = 1;
    CHECK_FALSE(mired::generate_synthetic(spec)[0].features == a[0].features);
  }

  TEST_CASE("spec and manifest round-trip") {
    mired::SynthSpec spec;
    spec.n_per_domain = 30;
    spec.spurious_spread = 0.25;
    spec.seed = 9;
    CHECK(mired::synth_spec_from_text(mired::synth_spec_to_text(spec)) == spec);
    CHECK_THROWS_AS(mired::synth_spec_from_text("n_per_domain = -3\n"), mired::Error);
    CHECK_THROWS_AS(mired::synth_spec_from_text("bogus = 1\n"), mired::Error);

    const auto dir = testing::temp_dir("manifest");
    const auto domains = mired::generate_synthetic(spec);
    mired::write_synthetic(spec, domains, dir);
    const auto m = mired::manifest_from_text(mired::text::read_file(dir / "manifest.txt"));
    CHECK(m.spec == spec);
    REQUIRE(m.files.size() == domains.size());
    CHECK(mired::manifest_to_text(m) == mired::text::read_file(dir / "manifest.txt"));
    for (std::size_t i = 0; i < domains.size(); ++i) {
      CHECK(m.files[i].second == domains[i].role);
      const auto back = mired::load_csv(dir / m.files[i].first, "label", std::string("domain"));
      REQUIRE(back.datasets.size() == 1);
      CHECK(back.datasets[0].name == domains[i].name);
      CHECK(back.datasets[0].labels == domains[i].labels);
      CHECK(testing::max_abs_diff(back.datasets[0].features, domains[i].features) == 0.0);
    }
  }

  TEST_CASE("latent export round-trip") {
    const std::size_t dims[] = {3, 2};
    const auto m = mired::init_model(mired::encoder_topology(dims), 2, 1);
    DomainDataset ds;
    ds.name = "d";
    ds.role = Role::cross;
    ds.features = testing::random_matrix(4, 3, 2);
    ds.labels = {0, 1, 1, 0};
    ds.feature_names = {"a", "b", "c"};
    const auto z = mired::encode(m, ds.features);
    const std::vector<DomainDataset> v{ds};
    const std::string csv = mired::export_latents(m, v);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "domain,role,label,z_1,z_2");
    for (std::size_t r = 0; r < 4; ++r) {
      REQUIRE(std::getline(in, line));
      const auto f = mired::text::split_csv_record(line);
      REQUIRE(f.size() == 5);
      CHECK(f[0] == "d");
      CHECK(f[1] == "cross");
      CHECK(std::stoi(f[2]) == ds.labels[r]);
      CHECK(std::stod(f[3]) == doctest::Approx(z(r, 0)).epsilon(1e-12));
      CHECK(std::stod(f[4]) == doctest::Approx(z(r, 1)).epsilon(1e-12));
    }
  }
}
