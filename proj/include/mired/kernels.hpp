#pragma once

// Data-parallel inner loops shared by the estimators and the network.
//
// The OpenMP versions split work by output row only; every output entry is
// accumulated in the same index order as the serial reference, so the two
// produce bit-identical results for any thread count.

#include "mired/densemath.hpp"

namespace mired::kernels {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
/// out(i,j) = ||a_i - b_j||^2
DenseMatrix pairwise_sq_dist(const DenseMatrix& a, const DenseMatrix& b);
/// out(i,j) = exp(-||a_i - b_j||^2 / (2 sigma^2))
DenseMatrix rbf(const DenseMatrix& a, const DenseMatrix& b, double sigma);

namespace serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix pairwise_sq_dist(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix rbf(const DenseMatrix& a, const DenseMatrix& b, double sigma);

}  // namespace serial

}  // namespace mired::kernels
