#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mired {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::string shape_string() const;
  bool all_finite() const;
  DenseMatrix transposed() const;
  DenseMatrix select_rows(std::span<const std::size_t> indices) const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(DenseMatrix a, double s);

struct EigenResult {
  std::vector<double> eigenvalues;  // descending
  DenseMatrix eigenvectors;         // column i pairs with eigenvalues[i]
};

inline constexpr int kDefaultJacobiSweeps = 100;

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
double trace(const DenseMatrix& a);
double frobenius_norm_sq(const DenseMatrix& a);
double max_abs_row_sum(const DenseMatrix& a);  // induced infinity norm

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. The input is
/// symmetrized as (A + A^T)/2 first; it must already be symmetric to 1e-10
/// (relative to its largest entry). Converges once the largest off-diagonal
/// magnitude drops below `tol`.
EigenResult sym_eigen(const DenseMatrix& a, double tol = 1e-14,
                      int max_sweeps = kDefaultJacobiSweeps);

/// Unbiased (n-1) covariance of the columns of `samples`.
DenseMatrix covariance(const DenseMatrix& samples);
double frobenius_distance_sq(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace mired
