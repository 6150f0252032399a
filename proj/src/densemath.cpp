#include "mired/densemath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mired/error.hpp"
#include "mired/kernels.hpp"

namespace mired {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void require_square(const DenseMatrix& a, const char* op) {
  if (!a.is_square()) {
    throw ShapeError(std::string(op) + ": expected a square matrix, got " + a.shape_string());
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("DenseMatrix: " + std::to_string(data_.size()) +
                     " values do not fill " + shape_string());
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
  DenseMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

std::string DenseMatrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::select_rows(std::span<const std::size_t> indices) const {
  DenseMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw ShapeError("select_rows: index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() + " * " +
                     b.shape_string());
  }
  return kernels::matmul(a, b);
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ, " + a.shape_string() + "^T * " +
                     b.shape_string());
  }
  return kernels::matmul_tn(a, b);
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts differ, " + a.shape_string() + " * " +
                     b.shape_string() + "^T");
  }
  return kernels::matmul_nt(a, b);
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

double trace(const DenseMatrix& a) {
  require_square(a, "trace");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double frobenius_norm_sq(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

double max_abs_row_sum(const DenseMatrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.row(i)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

EigenResult sym_eigen(const DenseMatrix& input, double tol, int max_sweeps) {
  require_square(input, "sym_eigen");
  if (!input.all_finite()) throw NumericalError("sym_eigen: non-finite input");
  const std::size_t n = input.rows();

  double max_entry = 0.0;
  for (double v : input.data()) max_entry = std::max(max_entry, std::abs(v));
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double asym = std::abs(input(i, j) - input(j, i));
      if (asym > 1e-10 * std::max(1.0, max_entry)) {
        std::ostringstream msg;
        msg << "sym_eigen: input not symmetric at (" << i << "," << j << "), |a_ij - a_ji| = "
            << asym;
        throw ValueError(msg.str());
      }
      a(i, j) = 0.5 * (input(i, j) + input(j, i));
    }
  }

  DenseMatrix v = DenseMatrix::identity(n);
  auto max_off = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
  };

  int sweep = 0;
  double off = max_off();
  while (off >= tol) {
    if (sweep == max_sweeps) {
      std::ostringstream msg;
      msg << "sym_eigen: no convergence after " << max_sweeps
          << " sweeps, max off-diagonal residual " << off;
      throw ConvergenceError(msg.str());
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Once a_pq is below the rounding level of both diagonal entries the
        // rotation is a no-op; zero it so the sweep terminates.
        if (std::abs(apq) * 1e18 <= std::abs(app) && std::abs(apq) * 1e18 <= std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = max_off();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.eigenvalues[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = v(r, order[c]);
  }
  return out;
}

DenseMatrix covariance(const DenseMatrix& samples) {
  const std::size_t n = samples.rows();
  if (n < 2) {
    throw ValueError("covariance: need at least 2 samples, got " + std::to_string(n));
  }
  const std::size_t d = samples.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += samples(i, j);
  for (double& m : mean) m /= static_cast<double>(n);

  DenseMatrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = samples(i, j) - mean[j];
  DenseMatrix cov = kernels::matmul_tn(centered, centered);
  cov *= 1.0 / static_cast<double>(n - 1);
  return cov;
}

double frobenius_distance_sq(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "frobenius_distance_sq");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s;
}

}  // namespace mired
