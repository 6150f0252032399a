#include "mired/kernelinfo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mired/error.hpp"
#include "mired/kernels.hpp"

namespace mired {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha)) {
    std::ostringstream msg;
    msg << "Renyi order alpha must be positive and != 1, got " << alpha;
    throw ValueError(msg.str());
  }
}

void check_sigma(double sigma, const char* what) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    std::ostringstream msg;
    msg << what << " must be a positive finite bandwidth, got " << sigma;
    throw ValueError(msg.str());
  }
}

EntropyEstimate entropy_from_potential(double potential, double alpha) {
  if (!(potential > 0.0) || !std::isfinite(potential)) {
    std::ostringstream msg;
    msg << "information potential must be positive, got " << potential;
    throw NumericalError(msg.str());
  }
  return {std::log2(potential) / (1.0 - alpha), potential};
}

}  // namespace

void KernelConfig::validate() const {
  check_sigma(bandwidth, "kernel bandwidth");
  check_alpha(alpha);
}

GramMatrix GramMatrix::from_normalized(DenseMatrix m) {
  if (!m.is_square() || m.rows() == 0) {
    throw ShapeError("GramMatrix: expected a non-empty square matrix, got " + m.shape_string());
  }
  if (!m.all_finite()) throw NumericalError("GramMatrix: non-finite entry");
  const std::size_t l = m.rows();
  const double inv_l = 1.0 / static_cast<double>(l);
  for (std::size_t i = 0; i < l; ++i) {
    if (std::abs(m(i, i) - inv_l) > 1e-12) {
      std::ostringstream msg;
      msg << "GramMatrix: diagonal entry " << i << " is " << m(i, i) << ", expected 1/" << l;
      throw ValueError(msg.str());
    }
    for (std::size_t j = i + 1; j < l; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-12) {
        throw ValueError("GramMatrix: not symmetric at (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
      }
    }
  }
  return GramMatrix(std::move(m));
}

DenseMatrix rbf_gram(const DenseMatrix& samples, double sigma) {
  check_sigma(sigma, "rbf_gram");
  if (samples.rows() == 0) throw ShapeError("rbf_gram: empty sample set");
  if (!samples.all_finite()) throw NumericalError("rbf_gram: non-finite sample value");
  return kernels::rbf(samples, samples, sigma);
}

GramMatrix normalize_gram(const DenseMatrix& raw) {
  if (!raw.is_square() || raw.rows() == 0) {
    throw ShapeError("normalize_gram: expected a non-empty square matrix, got " +
                     raw.shape_string());
  }
  const std::size_t l = raw.rows();
  std::vector<double> root(l);
  for (std::size_t i = 0; i < l; ++i) {
    if (!(raw(i, i) > 0.0)) {
      std::ostringstream msg;
      msg << "normalize_gram: degenerate kernel, diagonal entry " << i << " is " << raw(i, i);
      throw ValueError(msg.str());
    }
    root[i] = std::sqrt(raw(i, i));
  }
  const double inv_l = 1.0 / static_cast<double>(l);
  DenseMatrix out(l, l);
  for (std::size_t i = 0; i < l; ++i) {
    out(i, i) = inv_l;
    for (std::size_t j = i + 1; j < l; ++j) {
      const double v = inv_l * raw(i, j) / (root[i] * root[j]);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return GramMatrix(std::move(out));
}

double quadratic_entropy_nats(const DenseMatrix& k) {
  const double potential = frobenius_norm_sq(k);
  if (!(potential > 0.0)) throw NumericalError("quadratic_entropy_nats: tr(K^2) == 0");
  return -std::log(potential);
}

EntropyEstimate renyi_entropy_eigen(const GramMatrix& g, double alpha) {
  check_alpha(alpha);
  const EigenResult eig = sym_eigen(g.matrix(), 1e-15);
  double potential = 0.0;
  for (double lambda : eig.eigenvalues) potential += std::pow(std::max(lambda, 0.0), alpha);
  return entropy_from_potential(potential, alpha);
}

EntropyEstimate renyi_entropy(const GramMatrix& g, double alpha) {
  check_alpha(alpha);
  if (alpha == 2.0) return entropy_from_potential(frobenius_norm_sq(g.matrix()), 2.0);
  return renyi_entropy_eigen(g, alpha);
}

EntropyEstimate joint_entropy(const GramMatrix& gx, const GramMatrix& gz, double alpha) {
  if (gx.size() != gz.size()) {
    throw ShapeError("joint_entropy: batch sizes differ, " + std::to_string(gx.size()) +
                     " vs " + std::to_string(gz.size()));
  }
  DenseMatrix joint = hadamard(gx.matrix(), gz.matrix());
  const double t = trace(joint);
  if (!(t > 0.0)) {
    std::ostringstream msg;
    msg << "joint_entropy: tr(Kx o Kz) = " << t << " is not positive";
    throw NumericalError(msg.str());
  }
  joint *= 1.0 / t;
  return renyi_entropy(GramMatrix(std::move(joint)), alpha);
}

double mutual_information(const GramMatrix& gx, const GramMatrix& gz, double alpha) {
  return renyi_entropy(gx, alpha).value + renyi_entropy(gz, alpha).value -
         joint_entropy(gx, gz, alpha).value;
}

DenseMatrix grad_entropy_wrt_gram(const GramMatrix& g) {
  const double potential = frobenius_norm_sq(g.matrix());
  if (!(potential > 0.0)) throw NumericalError("grad_entropy_wrt_gram: tr(K^2) == 0");
  return g.matrix() * (-2.0 / potential);
}

MiGradient mi_with_latent_gradient(const GramMatrix& gx, const DenseMatrix& z, double sigma_z) {
  check_sigma(sigma_z, "latent bandwidth");
  const std::size_t l = z.rows();
  if (l != gx.size()) {
    throw ShapeError("mi_with_latent_gradient: input Gram is " + std::to_string(gx.size()) +
                     "x" + std::to_string(gx.size()) + " but latent batch has " +
                     std::to_string(l) + " rows");
  }
  if (l < 2) throw ValueError("mi_with_latent_gradient: batch needs at least 2 rows");

  const DenseMatrix kz = rbf_gram(z, sigma_z);
  const GramMatrix gz = normalize_gram(kz);
  const DenseMatrix& x = gx.matrix();
  const DenseMatrix& n = gz.matrix();

  const DenseMatrix p = hadamard(x, n);
  const double s_z = frobenius_norm_sq(n);
  const double s_p = frobenius_norm_sq(p);
  const double t = trace(p);

  MiGradient out;
  out.mi_nats = -std::log(frobenius_norm_sq(x)) - std::log(s_z) + std::log(s_p) -
                2.0 * std::log(t);

  // d MI / d Gz
  DenseMatrix d_norm(l, l);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      d_norm(i, j) = -2.0 * n(i, j) / s_z + 2.0 * p(i, j) * x(i, j) / s_p;
    }
    d_norm(i, i) -= 2.0 * x(i, i) / t;
  }

  // Back through the normalization. Diagonal entries of Gz are constant; the
  // raw diagonal derivative is kept for generality although the RBF diagonal
  // does not depend on z.
  std::vector<double> root(l);
  for (std::size_t i = 0; i < l; ++i) root[i] = std::sqrt(kz(i, i));
  const double inv_l = 1.0 / static_cast<double>(l);
  DenseMatrix d_raw(l, l);
  for (std::size_t i = 0; i < l; ++i) {
    double diag = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      if (j == i) continue;
      d_raw(i, j) = d_norm(i, j) * inv_l / (root[i] * root[j]);
      diag -= (d_norm(i, j) * n(i, j) + d_norm(j, i) * n(j, i)) / (2.0 * kz(i, i));
    }
    d_raw(i, i) = diag;
  }

  // RBF: dK_ij/dz_i = K_ij (z_j - z_i) / sigma^2.
  DenseMatrix w(l, l);
  std::vector<double> row_sum(l, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      if (j == i) continue;
      const double v = (d_raw(i, j) + d_raw(j, i)) * kz(i, j);
      w(i, j) = v;
      row_sum[i] += v;
    }
  }
  const double inv_s2 = 1.0 / (sigma_z * sigma_z);
  DenseMatrix grad = kernels::matmul(w, z);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t c = 0; c < z.cols(); ++c) {
      grad(i, c) = (grad(i, c) - row_sum[i] * z(i, c)) * inv_s2;
    }
  }
  out.grad_latent = std::move(grad);
  if (!out.grad_latent.all_finite() || !std::isfinite(out.mi_nats)) {
    throw NumericalError("mi_with_latent_gradient: non-finite result");
  }
  return out;
}

DenseMatrix grad_mi_wrt_latent(const DenseMatrix& x, const DenseMatrix& z, double sigma_x,
                               double sigma_z) {
  check_sigma(sigma_z, "latent bandwidth");
  if (x.rows() != z.rows()) {
    throw ShapeError("grad_mi_wrt_latent: input batch " + x.shape_string() +
                     " and latent batch " + z.shape_string() + " differ in rows");
  }
  const GramMatrix gx = normalize_gram(rbf_gram(x, sigma_x));
  return mi_with_latent_gradient(gx, z, sigma_z).grad_latent;
}

}  // namespace mired
