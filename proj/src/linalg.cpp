#include "nicon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "nicon/error.hpp"

namespace nicon {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw UsageError("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                       ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const int r = triplets[k].row, c = triplets[k].col;
    double v = 0.0;
    while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) v += triplets[k++].value;
    m.col_indices_.push_back(c);
    m.values_.push_back(v);
    ++m.row_offsets_[static_cast<std::size_t>(r) + 1];
  }
  for (int r = 0; r < rows; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
  return m;
}

CsrMatrix CsrMatrix::identity(int n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

double CsrMatrix::at(int i, int j) const {
  auto first = col_indices_.begin() + row_offsets_[i];
  auto last = col_indices_.begin() + row_offsets_[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_)
    throw UsageError("spmv dimension mismatch: matrix " + std::to_string(rows_) + "x" +
                     std::to_string(cols_) + ", x has " + std::to_string(x.size()));
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s += values_[k] * x[col_indices_[k]];
    y[r] = s;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows_));
  multiply(x, y);
  return y;
}

std::vector<double> CsrMatrix::multiply_transpose(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != rows_) throw UsageError("transposed spmv dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(cols_), 0.0);
  for (int r = 0; r < rows_; ++r)
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) y[col_indices_[k]] += values_[k] * x[r];
  return y;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (int r = 0; r < rows_; ++r)
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) t.push_back({col_indices_[k], r, values_[k]});
  return from_triplets(cols_, rows_, std::move(t));
}

double CsrMatrix::max_asymmetry() const {
  if (rows_ != cols_) throw UsageError("asymmetry of a non-square matrix");
  double worst = 0.0;
  for (int r = 0; r < rows_; ++r)
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      worst = std::max(worst, std::abs(values_[k] - at(col_indices_[k], r)));
  return worst;
}

CsrMatrix CsrMatrix::add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw UsageError("matrix sum shape mismatch");
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  for (int r = 0; r < a.rows_; ++r) {
    for (int k = a.row_offsets_[r]; k < a.row_offsets_[r + 1]; ++k)
      t.push_back({r, a.col_indices_[k], alpha * a.values_[k]});
    for (int k = b.row_offsets_[r]; k < b.row_offsets_[r + 1]; ++k)
      t.push_back({r, b.col_indices_[k], beta * b.values_[k]});
  }
  return from_triplets(a.rows_, a.cols_, std::move(t));
}

CsrMatrix CsrMatrix::submatrix(std::span<const int> rows, std::span<const int> cols) const {
  std::vector<int> col_map(static_cast<std::size_t>(cols_), -1);
  for (std::size_t c = 0; c < cols.size(); ++c) col_map[cols[c]] = static_cast<int>(c);
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int src = rows[r];
    for (int k = row_offsets_[src]; k < row_offsets_[src + 1]; ++k) {
      int c = col_map[col_indices_[k]];
      if (c >= 0) t.push_back({static_cast<int>(r), c, values_[k]});
    }
  }
  return from_triplets(static_cast<int>(rows.size()), static_cast<int>(cols.size()), std::move(t));
}

void CsrMatrix::write_coo(std::ostream& os) const {
  os << rows_ << ' ' << cols_ << ' ' << values_.size() << '\n';
  for (int r = 0; r < rows_; ++r)
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      os << r << ' ' << col_indices_[k] << ' ' << values_[k] << '\n';
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_csr(const CsrMatrix& a) {
  DenseMatrix m(a.rows(), a.cols());
  auto off = a.row_offsets();
  auto col = a.col_indices();
  auto val = a.values();
  for (int r = 0; r < a.rows(); ++r)
    for (int k = off[r]; k < off[r + 1]; ++k) m(r, col[k]) = val[k];
  return m;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& o) const {
  if (cols_ != o.rows_) throw UsageError("dense product shape mismatch");
  DenseMatrix c(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < o.cols_; ++j) c(i, j) += aik * o(k, j);
    }
  return c;
}

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, const CgOptions& opts) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n) throw UsageError("cg: dimension mismatch");
  if (!(opts.tol > 0.0)) throw UsageError("cg: tolerance must be positive");
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * std::max(n, 1);

  CgResult res;
  res.x.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> p = r;
  std::vector<double> ap(static_cast<std::size_t>(n));
  const double bnorm = norm2(b);
  double rr = dot(r, r);
  res.residual_history.push_back(std::sqrt(rr));
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  const double target = opts.tol * bnorm;
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= target) break;
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (std::isnan(pap)) throw NumericalError("cg: NaN encountered");
    if (pap <= 0.0) throw NumericalError("cg: non-positive curvature, matrix is not SPD");
    const double alpha = rr / pap;
    for (int i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    res.iterations = it + 1;
    res.residual_history.push_back(std::sqrt(rr));
  }
  // Report the true residual rather than the recursively updated one.
  std::vector<double> ax = a.multiply(res.x);
  for (int i = 0; i < n; ++i) ax[i] = b[i] - ax[i];
  res.residual_norm = norm2(ax);
  if (std::isnan(res.residual_norm)) throw NumericalError("cg: NaN in final residual");
  res.converged = std::sqrt(rr) <= target;
  return res;
}

namespace {

struct LuFactor {
  DenseMatrix lu;
  std::vector<int> perm;
};

LuFactor lu_factor(const DenseMatrix& a) {
  const int n = a.rows();
  if (a.cols() != n) throw UsageError("LU of a non-square matrix");
  LuFactor f{a, std::vector<int>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) f.perm[i] = i;
  double scale = 0.0;
  for (double v : a.values()) scale = std::max(scale, std::abs(v));
  const double tiny = scale * n * 1e-15;
  DenseMatrix& m = f.lu;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    if (!(std::abs(m(piv, k)) > tiny)) throw NumericalError("matrix is singular to working precision");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    const double inv = 1.0 / m(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double l = m(i, k) * inv;
      m(i, k) = l;
      if (l == 0.0) continue;
      for (int j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
    }
  }
  return f;
}

void lu_solve_inplace(const LuFactor& f, std::span<double> x) {
  const int n = f.lu.rows();
  const DenseMatrix& m = f.lu;
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= m(i, j) * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
}

}  // namespace

DenseMatrix dense_invert(const DenseMatrix& a) {
  const int n = a.rows();
  LuFactor f = lu_factor(a);
  DenseMatrix inv(n, n);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < n; ++i) col[i] = f.perm[i] == c ? 1.0 : 0.0;
    lu_solve_inplace(f, col);
    for (int i = 0; i < n; ++i) inv(i, c) = col[i];
  }
  return inv;
}

std::vector<double> dense_solve(const DenseMatrix& a, std::span<const double> b) {
  const int n = a.rows();
  if (static_cast<int>(b.size()) != n) throw UsageError("dense solve dimension mismatch");
  LuFactor f = lu_factor(a);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  lu_solve_inplace(f, x);
  return x;
}

EigenEstimate min_eigenvalue_spd(const CsrMatrix& a, double tol, int max_iter) {
  const int n = a.rows();
  if (n == 0 || a.cols() != n) throw UsageError("eigenvalue of an empty or non-square matrix");
  // Deterministic start vector with components in all eigendirections.
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + 3.7 * i);
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  EigenEstimate est;
  double lambda = dot(v, a.multiply(v));
  CgOptions inner;
  inner.tol = 1e-13;
  for (int it = 1; it <= max_iter; ++it) {
    CgResult s = cg_solve(a, v, inner);
    nv = norm2(s.x);
    if (!(nv > 0.0) || std::isnan(nv)) throw NumericalError("inverse iteration breakdown");
    for (int i = 0; i < n; ++i) v[i] = s.x[i] / nv;
    const double next = dot(v, a.multiply(v));
    est.iterations = it;
    est.value = next;
    if (std::abs(next - lambda) <= tol * std::abs(next)) {
      est.converged = true;
      return est;
    }
    lambda = next;
  }
  return est;
}

}  // namespace nicon
