#pragma once

// Helpers shared by the unit tests: random inputs and naive reference
// implementations used as oracles.

#include <cmath>
#include <cstdint>
#include <random>

#include "mired/densemath.hpp"

namespace testing {

inline mired::DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                                        double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  mired::DenseMatrix m(r, c);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

inline mired::DenseMatrix naive_matmul(const mired::DenseMatrix& a, const mired::DenseMatrix& b) {
  mired::DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline double max_abs_diff(const mired::DenseMatrix& a, const mired::DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Raw RBF Gram straight from the definition.
inline mired::DenseMatrix naive_rbf(const mired::DenseMatrix& x, double sigma) {
  mired::DenseMatrix k(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.rows(); ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) d2 += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      k(i, j) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  return k;
}

}  // namespace testing

#include <filesystem>
#include <string>

namespace testing {

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mired_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
