#include "mired/objectives.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mired/error.hpp"
#include "mired/kernels.hpp"

namespace mired {

namespace {

void check_weight(double w, const char* name, std::vector<std::string>& problems) {
  if (!std::isfinite(w) || w < 0.0) {
    std::ostringstream msg;
    msg << name << " must be finite and >= 0, got " << w;
    problems.push_back(msg.str());
  }
}

void check_partition(const BatchPartition& part, std::size_t rows, std::size_t min_size,
                     const char* who) {
  if (part.first.size() < min_size || part.second.size() < min_size) {
    std::ostringstream msg;
    msg << who << ": each partition needs at least " << min_size << " rows, got "
        << part.first.size() << " and " << part.second.size();
    throw ValueError(msg.str());
  }
  for (auto idx : part.first)
    if (idx >= rows) throw ShapeError(std::string(who) + ": partition index out of range");
  for (auto idx : part.second)
    if (idx >= rows) throw ShapeError(std::string(who) + ": partition index out of range");
}

// (1/n^2) * 2 * sum_j k_ij (a_j - a_i) / sigma^2, i.e. the self-term gradient
// of the MMD with a given pairwise weight.
void add_pair_gradient(const DenseMatrix& k, const DenseMatrix& from, const DenseMatrix& to,
                       double scale, DenseMatrix& grad) {
  // grad_i += scale * sum_j k_ij (to_j - from_i)
  DenseMatrix kt = kernels::matmul(k, to);
  for (std::size_t i = 0; i < from.rows(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k.cols(); ++j) row_sum += k(i, j);
    for (std::size_t c = 0; c < from.cols(); ++c)
      grad(i, c) += scale * (kt(i, c) - row_sum * from(i, c));
  }
}

double mean_entry(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v;
  return s / static_cast<double>(m.size());
}

// Scatter the rows of `src` into `dst` at the given indices, scaled.
void scatter_add(DenseMatrix& dst, const std::vector<std::size_t>& rows, const DenseMatrix& src,
                 double scale) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < src.cols(); ++c) dst(rows[i], c) += scale * src(i, c);
}

struct CoralGradient {
  double value = 0.0;
  DenseMatrix grad_a;
  DenseMatrix grad_b;
};

CoralGradient coral_with_gradient(const DenseMatrix& a, const DenseMatrix& b) {
  const DenseMatrix ca = covariance(a);
  const DenseMatrix cb = covariance(b);
  const DenseMatrix diff = ca - cb;
  CoralGradient out;
  out.value = frobenius_norm_sq(diff);

  // d||Ca - Cb||^2 / dA = 2/(n-1) * centered(A) * 2(Ca - Cb)
  auto grad_for = [&](const DenseMatrix& s, double sign) {
    const std::size_t n = s.rows();
    std::vector<double> mean(s.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < s.cols(); ++c) mean[c] += s(i, c);
    for (double& m : mean) m /= static_cast<double>(n);
    DenseMatrix centered(n, s.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < s.cols(); ++c) centered(i, c) = s(i, c) - mean[c];
    DenseMatrix g = kernels::matmul(centered, diff);
    g *= sign * 4.0 / static_cast<double>(n - 1);
    return g;
  };
  out.grad_a = grad_for(a, 1.0);
  out.grad_b = grad_for(b, -1.0);
  return out;
}

struct Evaluation {
  LossBreakdown loss;
  GradientBundle grads;
};

Evaluation evaluate(const ObjectiveSpec& spec, const MlpModel& model, const DenseMatrix& x,
                    std::span<const int> labels, const BatchPartition& partition,
                    bool want_grad) {
  spec.validate();
  model.validate();
  if (x.rows() == 0) throw ValueError("objective: empty batch");
  if (x.cols() != model.input_dim()) {
    throw ShapeError("objective: batch has " + std::to_string(x.cols()) +
                     " features, model expects " + std::to_string(model.input_dim()));
  }
  if (labels.size() != x.rows()) throw ShapeError("objective: label count differs from rows");

  Evaluation ev;
  if (want_grad) ev.grads = zero_gradients(model);
  LossBreakdown& loss = ev.loss;
  loss.w_rec = spec.rec_weight();
  loss.w_reg = spec.reg_weight();

  const std::span<const DenseLayer> head(&model.head, 1);
  StackCache enc_cache, head_cache, dec_cache;
  const DenseMatrix z = forward_stack(model.encoder, x, &enc_cache);
  const DenseMatrix logits = forward_stack(head, z, &head_cache);
  loss.ce = cross_entropy_loss(logits, labels);
  const DenseMatrix x_hat = forward_stack(model.decoder, z, &dec_cache);
  loss.rec = reconstruction_loss(x, x_hat);

  DenseMatrix g_z;
  if (want_grad) {
    g_z = backward_stack(head, head_cache, cross_entropy_grad(logits, labels),
                         std::span<LayerGrad>(&ev.grads.head, 1));
    g_z += backward_stack(model.decoder, dec_cache,
                          reconstruction_grad(x, x_hat) * loss.w_rec, ev.grads.decoder);
  }

  switch (spec.kind) {
    case ObjectiveKind::dmtae:
      break;
    case ObjectiveKind::mtls_red: {
      if (x.rows() < 2) throw ValueError("mtls_red: the MI term needs a batch of at least 2");
      const GramMatrix gx = normalize_gram(rbf_gram(x, spec.sigma_input()));
      const MiGradient mi = mi_with_latent_gradient(gx, z, spec.sigma_latent());
      loss.reg = mi.mi_nats / std::numbers::ln2;
      if (want_grad && loss.w_reg > 0.0) {
        g_z += mi.grad_latent * (loss.w_reg / std::numbers::ln2);
      }
      break;
    }
    case ObjectiveKind::mmd_ae: {
      check_partition(partition, x.rows(), 1, "mmd_ae");
      const DenseMatrix za = z.select_rows(partition.first);
      const DenseMatrix zb = z.select_rows(partition.second);
      if (want_grad) {
        const MmdGradient m = mmd_with_gradient(za, zb, spec.sigma_mmd());
        loss.reg = m.value;
        scatter_add(g_z, partition.first, m.grad_a, loss.w_reg);
        scatter_add(g_z, partition.second, m.grad_b, loss.w_reg);
      } else {
        loss.reg = mmd(za, zb, spec.sigma_mmd());
      }
      break;
    }
    case ObjectiveKind::coral: {
      check_partition(partition, x.rows(), 2, "coral");
      const CoralGradient c =
          coral_with_gradient(z.select_rows(partition.first), z.select_rows(partition.second));
      loss.reg = c.value;
      if (want_grad) {
        scatter_add(g_z, partition.first, c.grad_a, loss.w_reg);
        scatter_add(g_z, partition.second, c.grad_b, loss.w_reg);
      }
      break;
    }
    case ObjectiveKind::nsae: {
      // Feed the reconstruction back through the autoencoder. x_hat is not
      // detached: both passes contribute to the gradient.
      StackCache enc2_cache, dec2_cache;
      const DenseMatrix z2 = forward_stack(model.encoder, x_hat, &enc2_cache);
      const DenseMatrix x_hat2 = forward_stack(model.decoder, z2, &dec2_cache);
      loss.reg = reconstruction_loss(x_hat, x_hat2);
      if (want_grad) {
        const DenseMatrix g_xhat2 = reconstruction_grad(x_hat, x_hat2) * loss.w_reg;
        const DenseMatrix g_z2 =
            backward_stack(model.decoder, dec2_cache, g_xhat2, ev.grads.decoder);
        DenseMatrix g_xhat = backward_stack(model.encoder, enc2_cache, g_z2, ev.grads.encoder);
        g_xhat -= g_xhat2;
        g_z += backward_stack(model.decoder, dec_cache, g_xhat, ev.grads.decoder);
      }
      break;
    }
  }

  loss.total = loss.ce + loss.w_rec * loss.rec + loss.w_reg * loss.reg;
  if (!std::isfinite(loss.total)) {
    std::ostringstream msg;
    msg << "objective " << to_string(spec.kind) << ": non-finite loss (ce=" << loss.ce
        << ", rec=" << loss.rec << ", reg=" << loss.reg << ")";
    throw NumericalError(msg.str());
  }

  if (want_grad) {
    backward_stack(model.encoder, enc_cache, g_z, ev.grads.encoder);
    ev.grads.loss = loss;
    if (!ev.grads.all_finite()) {
      throw NumericalError("objective " + to_string(spec.kind) + ": non-finite gradient");
    }
  }
  return ev;
}

}  // namespace

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::mtls_red:
      return "mtls_red";
    case ObjectiveKind::dmtae:
      return "dmtae";
    case ObjectiveKind::mmd_ae:
      return "mmd_ae";
    case ObjectiveKind::coral:
      return "coral";
    case ObjectiveKind::nsae:
      return "nsae";
  }
  return "mtls_red";
}

ObjectiveKind objective_from_string(const std::string& name) {
  if (name == "mtls_red") return ObjectiveKind::mtls_red;
  if (name == "dmtae") return ObjectiveKind::dmtae;
  if (name == "mmd_ae") return ObjectiveKind::mmd_ae;
  if (name == "coral") return ObjectiveKind::coral;
  if (name == "nsae") return ObjectiveKind::nsae;
  throw ValueError("unknown objective kind '" + name +
                   "' (expected mtls_red, dmtae, mmd_ae, coral or nsae)");
}

double ObjectiveSpec::reg_weight() const {
  switch (kind) {
    case ObjectiveKind::mtls_red:
    case ObjectiveKind::coral:
      return beta;
    case ObjectiveKind::mmd_ae:
    case ObjectiveKind::nsae:
      return lambda2;
    case ObjectiveKind::dmtae:
      return 0.0;
  }
  return 0.0;
}

void ObjectiveSpec::validate() const {
  std::vector<std::string> problems;
  check_weight(beta, "beta", problems);
  check_weight(lambda, "lambda", problems);
  check_weight(lambda2, "lambda2", problems);
  const bool kernel_kind = kind == ObjectiveKind::mtls_red || kind == ObjectiveKind::mmd_ae;
  if (kernel_kind) {
    try {
      kernel.validate();
      KernelConfig{sigma_input(), kernel.alpha}.validate();
      KernelConfig{sigma_latent(), kernel.alpha}.validate();
      KernelConfig{sigma_mmd(), kernel.alpha}.validate();
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
    if (kind == ObjectiveKind::mtls_red && kernel.alpha != 2.0) {
      problems.emplace_back("mtls_red trains with the second-order entropy only (alpha = 2)");
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid objective " + to_string(kind) + ":";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValueError(msg);
  }
}

double mmd(const DenseMatrix& a, const DenseMatrix& b, double sigma) {
  if (!(sigma > 0.0)) throw ValueError("mmd: bandwidth must be positive");
  if (a.rows() == 0 || b.rows() == 0) throw ValueError("mmd: both sample sets must be nonempty");
  if (a.cols() != b.cols()) {
    throw ShapeError("mmd: feature dims differ, " + a.shape_string() + " vs " + b.shape_string());
  }
  return mean_entry(kernels::rbf(a, a, sigma)) - 2.0 * mean_entry(kernels::rbf(a, b, sigma)) +
         mean_entry(kernels::rbf(b, b, sigma));
}

MmdGradient mmd_with_gradient(const DenseMatrix& a, const DenseMatrix& b, double sigma) {
  MmdGradient out;
  out.value = mmd(a, b, sigma);
  const DenseMatrix kaa = kernels::rbf(a, a, sigma);
  const DenseMatrix kab = kernels::rbf(a, b, sigma);
  const DenseMatrix kbb = kernels::rbf(b, b, sigma);
  const DenseMatrix kba = kab.transposed();
  const double n = static_cast<double>(a.rows());
  const double m = static_cast<double>(b.rows());
  const double inv_s2 = 1.0 / (sigma * sigma);
  out.grad_a = DenseMatrix(a.rows(), a.cols());
  out.grad_b = DenseMatrix(b.rows(), b.cols());
  add_pair_gradient(kaa, a, a, 2.0 * inv_s2 / (n * n), out.grad_a);
  add_pair_gradient(kab, a, b, -2.0 * inv_s2 / (n * m), out.grad_a);
  add_pair_gradient(kbb, b, b, 2.0 * inv_s2 / (m * m), out.grad_b);
  add_pair_gradient(kba, b, a, -2.0 * inv_s2 / (n * m), out.grad_b);
  return out;
}

double coral_distance(const DenseMatrix& a, const DenseMatrix& b) {
  return frobenius_distance_sq(covariance(a), covariance(b));
}

LossBreakdown assemble_loss(const ObjectiveSpec& spec, const MlpModel& model,
                            const DenseMatrix& x, std::span<const int> labels,
                            const BatchPartition& partition) {
  return evaluate(spec, model, x, labels, partition, false).loss;
}

GradientBundle backward(const MlpModel& model, const DenseMatrix& x,
                        std::span<const int> labels, const ObjectiveSpec& spec,
                        const BatchPartition& partition) {
  return evaluate(spec, model, x, labels, partition, true).grads;
}

}  // namespace mired
