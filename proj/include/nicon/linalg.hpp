#pragma once

// Sparse/dense kernels and solvers shared by the discretizations and the
// error-analysis checks. All arithmetic is binary64.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace nicon {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

class CsrMatrix {
 public:
  CsrMatrix() = default;

  // Duplicates are summed, columns sorted per row; exact zeros are kept so
  // that the sparsity pattern only depends on the triplet positions.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static CsrMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  std::span<const int> row_offsets() const { return row_offsets_; }
  std::span<const int> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  // Entry (i, j); zero when not stored.
  double at(int i, int j) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  // y = A^T x
  std::vector<double> multiply_transpose(std::span<const double> x) const;

  CsrMatrix transpose() const;
  // max |A_ij - A_ji|
  double max_asymmetry() const;
  // C = alpha A + beta B (same shape).
  static CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b);
  // Rows and columns picked by the two index lists.
  CsrMatrix submatrix(std::span<const int> rows, std::span<const int> cols) const;

  void write_coo(std::ostream& os) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double value = 0.0)
      : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, value) {}

  static DenseMatrix identity(int n);
  static DenseMatrix from_csr(const CsrMatrix& a);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) * cols_ + j]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  DenseMatrix operator*(const DenseMatrix& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

struct CgOptions {
  double tol = 1e-12;  // relative: ||b - Ax|| <= tol ||b||
  int max_iter = 0;    // 0 means 10 n
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double residual_norm = 0.0;  // final ||b - Ax||_2
  bool converged = false;
  std::vector<double> residual_history;  // ||r_k||_2, k = 0..iterations
};

// Unpreconditioned conjugate gradients for SPD systems. Non-convergence is
// reported through `converged`; a NaN or non-positive curvature p^T A p
// throws NumericalError.
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, const CgOptions& opts = {});

// LU with partial pivoting. Throws NumericalError when singular to working precision.
DenseMatrix dense_invert(const DenseMatrix& a);

// Dense solve through the same LU factorization (used for small oracles).
std::vector<double> dense_solve(const DenseMatrix& a, std::span<const double> b);

struct EigenEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Smallest eigenvalue of an SPD matrix by inverse power iteration with inner
// CG solves. Stops when the Rayleigh quotient changes by less than tol
// relative; otherwise returns the last estimate with converged = false.
EigenEstimate min_eigenvalue_spd(const CsrMatrix& a, double tol = 1e-12, int max_iter = 20000);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace nicon
