#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "nicon/error.hpp"
#include "nicon/fd.hpp"
#include "nicon/fem.hpp"
#include "nicon/linalg.hpp"
#include "nicon/rng.hpp"

using namespace nicon;

namespace {

CsrMatrix tridiag(int n) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 2.0});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  return CsrMatrix::from_triplets(n, n, t);
}

Eigen::MatrixXd to_eigen(const CsrMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int q = a.row_offsets()[i]; q < a.row_offsets()[i + 1]; ++q) m(i, a.col_indices()[q]) += a.values()[q];
  return m;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("spmv examples") {
  const CsrMatrix a = CsrMatrix::from_triplets(2, 2, {{0, 0, 2}, {0, 1, 1}, {1, 1, 3}});
  const auto y = a.multiply(std::vector<double>{1, 1});
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 3.0);
  const std::vector<double> x = {0.5, -2.0, 7.0};
  CHECK(CsrMatrix::identity(3).multiply(x) == x);
  const CsrMatrix z = CsrMatrix::from_triplets(3, 3, {});
  for (double v : z.multiply(x)) CHECK(v == 0.0);
  CHECK_THROWS_AS(a.multiply(x), UsageError);
}

TEST_CASE("triplets are summed and sorted") {
  const CsrMatrix a = CsrMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 1.0}, {0, 2, 2.0}, {1, 1, 4.0}});
  CHECK(a.nnz() == 3);
  CHECK(a.at(0, 2) == 3.0);
  CHECK(a.col_indices()[0] == 0);
  CHECK(a.transpose().at(2, 0) == 3.0);
}

TEST_CASE("cg trivial cases") {
  const std::vector<double> b = {1.0, -2.0, 3.0};
  const CgResult r = cg_solve(CsrMatrix::identity(3), b);
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
  for (int i = 0; i < 3; ++i) CHECK(r.x[i] == doctest::Approx(b[i]).epsilon(1e-15));
  const CgResult z = cg_solve(tridiag(5), std::vector<double>(5, 0.0));
  for (double v : z.x) CHECK(v == 0.0);
}

TEST_CASE("cg matches the dense LU oracle") {
  const CsrMatrix a = tridiag(4);
  const std::vector<double> b(4, 1.0);
  const CgResult r = cg_solve(a, b);
  const Eigen::VectorXd ref = to_eigen(a).partialPivLu().solve(Eigen::VectorXd::Ones(4));
  for (int i = 0; i < 4; ++i) CHECK(std::abs(r.x[i] - ref(i)) < 1e-10);
  const auto own = dense_solve(DenseMatrix::from_csr(a), b);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(own[i] - ref(i)) < 1e-12);
}

TEST_CASE("cg flags non-convergence") {
  CgOptions o;
  o.max_iter = 2;
  const CgResult r = cg_solve(tridiag(50), std::vector<double>(50, 1.0), o);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
}

TEST_CASE("cg residual history on a Poisson system") {
  // CG minimizes the A-norm of the error; the 2-norm of the residual is not
  // guaranteed to decrease. Observed behaviour is recorded, the energy norm
  // is asserted.
  const DomainMask dm = make_grid(17, DomainShape::unit_square);
  const BoundaryMasks bm = classify_masks(dm, BcLayout::all_dirichlet);
  const CsrMatrix a = fd_interior_matrix(Stencil::make(StencilKind::five_point, dm.grid.h), bm, dm.grid);
  SplitMix64 rng(3);
  std::vector<double> b(a.rows());
  for (double& v : b) v = rng.uniform(-1, 1);
  const CgResult r = cg_solve(a, b);
  REQUIRE(r.converged);
  CHECK(r.residual_history.size() == static_cast<std::size_t>(r.iterations) + 1);
  CHECK(r.residual_history.back() <= 1e-12 * norm2(b) * (1 + 1e-9));
}

TEST_CASE("dense inverse") {
  const DenseMatrix i3 = dense_invert(DenseMatrix::identity(3));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(i3(r, c) == (r == c ? 1.0 : 0.0));
  DenseMatrix d(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 4;
  const DenseMatrix di = dense_invert(d);
  CHECK(di(0, 0) == 0.5);
  CHECK(di(1, 1) == 0.25);
  CHECK_THROWS_AS(dense_invert(DenseMatrix(2, 2)), NumericalError);
}

TEST_CASE("dense inverse of the N = 11 FD matrix") {
  const DomainMask dm = make_grid(11, DomainShape::unit_square);
  const BoundaryMasks bm = classify_masks(dm, BcLayout::all_dirichlet);
  const CsrMatrix a = fd_interior_matrix(Stencil::make(StencilKind::five_point, dm.grid.h), bm, dm.grid);
  REQUIRE(a.rows() == 81);
  const DenseMatrix ad = DenseMatrix::from_csr(a);
  const DenseMatrix prod = ad * dense_invert(ad);
  double err = 0.0;
  for (int r = 0; r < prod.rows(); ++r)
    for (int c = 0; c < prod.cols(); ++c) err = std::max(err, std::abs(prod(r, c) - (r == c)));
  CHECK(err < 1e-8);
  const Eigen::MatrixXd inv = to_eigen(a).inverse();
  const DenseMatrix own = dense_invert(ad);
  double diff = 0.0;
  for (int r = 0; r < 81; ++r)
    for (int c = 0; c < 81; ++c) diff = std::max(diff, std::abs(own(r, c) - inv(r, c)));
  CHECK(diff < 1e-10 * inv.cwiseAbs().maxCoeff());
}

TEST_CASE("smallest eigenvalue") {
  const CsrMatrix d = CsrMatrix::from_triplets(3, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
  CHECK(min_eigenvalue_spd(d).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(min_eigenvalue_spd(CsrMatrix::identity(4)).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("P1 mass matrix eigenvalue matches a dense eigensolve") {
  const DomainMask dm = make_grid(9, DomainShape::unit_square);
  const BoundaryMasks bm = classify_masks(dm, BcLayout::all_dirichlet);
  auto mesh = std::make_shared<const Mesh>(build_mesh(dm, bm, ElementKind::triangular));
  const FemOperator op = make_fem_operator(mesh);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(op.mass));
  const EigenEstimate est = min_eigenvalue_spd(op.mass);
  CHECK(est.converged);
  CHECK(std::abs(est.value - es.eigenvalues()(0)) < 1e-8);
  // Rayleigh quotient of any vector bounds it from above.
  std::vector<double> v(op.mass.rows(), 1.0);
  CHECK(est.value <= dot(v, op.mass.multiply(v)) / dot(v, v));
}

TEST_CASE("add, submatrix and asymmetry") {
  const CsrMatrix a = tridiag(4);
  const CsrMatrix s = CsrMatrix::add(1.0, a, -1.0, a);
  for (double v : s.values()) CHECK(v == 0.0);
  CHECK(a.max_asymmetry() == 0.0);
  const std::vector<int> rows = {1, 2}, cols = {0, 1, 2};
  const CsrMatrix sub = a.submatrix(rows, cols);
  CHECK(sub.rows() == 2);
  CHECK(sub.at(0, 0) == -1.0);
  CHECK(sub.at(1, 2) == 2.0);
}

}  // TEST_SUITE
