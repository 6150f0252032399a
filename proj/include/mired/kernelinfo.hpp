#pragma once

// Matrix-based Renyi entropy of kernel Gram matrices, the Hadamard joint
// entropy and the mutual information built from them, plus analytical
// gradients for training.
//
// Entropies are reported in bits. The gradient helpers work with natural-log
// entropies; multiply by 1/ln 2 to get bits.

#include <cstddef>

#include "mired/densemath.hpp"

namespace mired {

struct KernelConfig {
  double bandwidth = 1.0;  // RBF length scale sigma
  double alpha = 2.0;      // Renyi order

  void validate() const;
};

struct EntropyEstimate {
  double value = 0.0;                  // bits
  double information_potential = 1.0;  // argument of the log
};

/// Normalized Gram matrix: symmetric, diagonal 1/l, trace 1.
class GramMatrix {
 public:
  /// Wraps an already normalized matrix after checking the invariants.
  static GramMatrix from_normalized(DenseMatrix m);

  const DenseMatrix& matrix() const { return m_; }
  std::size_t size() const { return m_.rows(); }

 private:
  friend GramMatrix normalize_gram(const DenseMatrix& raw);
  friend EntropyEstimate joint_entropy(const GramMatrix&, const GramMatrix&, double);
  explicit GramMatrix(DenseMatrix m) : m_(std::move(m)) {}
  DenseMatrix m_;
};

/// Raw RBF Gram matrix exp(-||x_i - x_j||^2 / (2 sigma^2)), unit diagonal.
DenseMatrix rbf_gram(const DenseMatrix& samples, double sigma);

/// out_ij = (1/l) raw_ij / sqrt(raw_ii raw_jj)
GramMatrix normalize_gram(const DenseMatrix& raw);

/// Renyi alpha-entropy in bits. alpha == 2 uses the trace path
/// -log2 ||K||_F^2; anything else goes through sym_eigen.
EntropyEstimate renyi_entropy(const GramMatrix& g, double alpha = 2.0);

/// Eigenvalue path for any alpha (eigenvalues clamped at 0).
EntropyEstimate renyi_entropy_eigen(const GramMatrix& g, double alpha);

/// Hadamard joint entropy H((gx o gz) / tr(gx o gz)).
EntropyEstimate joint_entropy(const GramMatrix& gx, const GramMatrix& gz, double alpha = 2.0);

/// H(gx) + H(gz) - H(gx, gz), bits.
double mutual_information(const GramMatrix& gx, const GramMatrix& gz, double alpha = 2.0);

/// -ln sum_ij K_ij^2 for an arbitrary square matrix. Second-order entropy in
/// nats without the Gram invariant checks; the finite-difference oracles
/// perturb single entries through this.
double quadratic_entropy_nats(const DenseMatrix& k);

/// d(-ln tr K^2)/dK = -2K / tr(K^2).
DenseMatrix grad_entropy_wrt_gram(const GramMatrix& g);

struct MiGradient {
  double mi_nats = 0.0;
  DenseMatrix grad_latent;  // l x d_z, d MI_nats / d z
};

/// Mutual information (nats) of an input Gram with the RBF Gram of `z`, and
/// its gradient with respect to every latent coordinate, chained through
/// rbf_gram and normalize_gram. The input side is held constant.
MiGradient mi_with_latent_gradient(const GramMatrix& gx, const DenseMatrix& z, double sigma_z);

/// Convenience form: builds the input Gram from `x` with bandwidth sigma_x.
DenseMatrix grad_mi_wrt_latent(const DenseMatrix& x, const DenseMatrix& z, double sigma_x,
                               double sigma_z);

}  // namespace mired
