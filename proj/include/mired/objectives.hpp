#pragma once

// Loss assembly for the MI-regularized model and the four baselines, with
// exact gradients for every parameter.
//
//   mtls_red  CE + beta * MI(X;Z) + lambda * REC
//   dmtae     CE + lambda * REC
//   mmd_ae    CE + lambda * REC + lambda2 * MMD(Z_source, Z_cross)
//   coral     CE + lambda * REC + beta * ||C_source - C_cross||_F^2
//   nsae      CE + lambda * REC + lambda2 * REC(f(g(x_hat)), x_hat)
//
// MI enters the loss in bits.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mired/densemath.hpp"
#include "mired/kernelinfo.hpp"
#include "mired/neuralnet.hpp"

namespace mired {

enum class ObjectiveKind { mtls_red, dmtae, mmd_ae, coral, nsae };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_from_string(const std::string& name);

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::mtls_red;
  double beta = 2.0;
  double lambda = 0.6;
  double lambda2 = 0.6;
  KernelConfig kernel;  // shared bandwidth
  std::optional<double> bandwidth_input;
  std::optional<double> bandwidth_latent;
  std::optional<double> bandwidth_mmd;

  double sigma_input() const { return bandwidth_input.value_or(kernel.bandwidth); }
  double sigma_latent() const { return bandwidth_latent.value_or(kernel.bandwidth); }
  double sigma_mmd() const { return bandwidth_mmd.value_or(kernel.bandwidth); }

  bool needs_partition() const {
    return kind == ObjectiveKind::coral || kind == ObjectiveKind::mmd_ae;
  }
  double rec_weight() const { return lambda; }
  double reg_weight() const;

  void validate() const;
};

/// Row indices (within the batch) of the two populations compared by the
/// CORAL and MMD terms: source rows and cross-domain rows.
struct BatchPartition {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

/// Biased V-statistic RBF MMD between the row sets of `a` and `b`.
double mmd(const DenseMatrix& a, const DenseMatrix& b, double sigma);

struct MmdGradient {
  double value = 0.0;
  DenseMatrix grad_a;
  DenseMatrix grad_b;
};
MmdGradient mmd_with_gradient(const DenseMatrix& a, const DenseMatrix& b, double sigma);

/// ||cov(a) - cov(b)||_F^2 over the latent codes of two populations.
double coral_distance(const DenseMatrix& a, const DenseMatrix& b);

LossBreakdown assemble_loss(const ObjectiveSpec& spec, const MlpModel& model,
                            const DenseMatrix& x, std::span<const int> labels,
                            const BatchPartition& partition = {});

/// Loss breakdown plus gradients of the total loss for every parameter.
GradientBundle backward(const MlpModel& model, const DenseMatrix& x,
                        std::span<const int> labels, const ObjectiveSpec& spec,
                        const BatchPartition& partition = {});

}  // namespace mired
