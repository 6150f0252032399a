#include "mired/kernels.hpp"

#include <cmath>

namespace mired::kernels::serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  }
  return c;
}

DenseMatrix pairwise_sq_dist(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix d(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
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
  for (double& v : k.data()) v = std::exp(-v * scale);
  return k;
}

}  // namespace mired::kernels::serial
