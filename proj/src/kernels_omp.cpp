#include "mired/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace mired::kernels {

// Row loops use signed indices for OpenMP; the inner loops mirror
// kernels_serial.cpp exactly.

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.cols(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.cols());
  const std::size_t inner = a.rows();
  const std::size_t cols = b.cols();
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.rows());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.rows();
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  }
  return c;
}

DenseMatrix pairwise_sq_dist(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix d(a.rows(), b.rows());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::size_t cols = b.rows();
  const std::size_t dim = a.cols();
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = a(i, k) - b(j, k);
        acc += diff * diff;
      }
      d(i, j) = acc;
    }
  }
  return d;
}

DenseMatrix rbf(const DenseMatrix& a, const DenseMatrix& b, double sigma) {
  DenseMatrix k = pairwise_sq_dist(a, b);
  const double scale = 1.0 / (2.0 * sigma * sigma);
  auto& v = k.data();
  const auto n = static_cast<std::int64_t>(v.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) v[i] = std::exp(-v[i] * scale);
  return k;
}

}  // namespace mired::kernels
