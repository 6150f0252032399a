#pragma once

// Finite-difference checks of the analytical gradients: entropy w.r.t. the
// Gram matrix, MI w.r.t. the latent codes, and the full backward pass of
// every objective.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mired/kernelinfo.hpp"
#include "mired/neuralnet.hpp"
#include "mired/objectives.hpp"

namespace mired {

/// Injection points so tests can substitute a broken gradient.
struct GradcheckHooks {
  std::function<DenseMatrix(const GramMatrix&)> entropy_grad = grad_entropy_wrt_gram;
  std::function<MiGradient(const GramMatrix&, const DenseMatrix&, double)> mi_grad =
      mi_with_latent_gradient;
  std::function<GradientBundle(const MlpModel&, const DenseMatrix&, std::span<const int>,
                               const ObjectiveSpec&, const BatchPartition&)>
      backward_fn = backward;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t entropy_trials = 100;
  std::size_t mi_trials = 100;
  std::size_t backward_trials = 50;  // per objective kind
  double entropy_tolerance = 1e-6;
  double tolerance = 1e-4;
};

struct CategoryResult {
  std::string name;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string failing_instance;  // replay description of the worst failing instance
};

struct GradcheckReport {
  std::vector<CategoryResult> categories;

  bool all_pass() const;
  std::string summary() const;  // one line per category
};

/// max|a - n| / max(||a||_inf, ||n||_inf, tiny)
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

GradcheckReport run_gradcheck(const GradcheckOptions& opts, const GradcheckHooks& hooks = {});

}  // namespace mired
