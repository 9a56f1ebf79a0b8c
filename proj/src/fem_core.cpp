#include "nicon/fem.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "nicon/error.hpp"

namespace nicon {

namespace {

// Gauss-Legendre rules on [0, 1].
struct Rule {
  std::array<double, 3> x;
  std::array<double, 3> w;
  int n;
};

Rule gauss(int n) {
  if (n == 2) {
    const double d = 0.5 / std::sqrt(3.0);
    return {{0.5 - d, 0.5 + d, 0.0}, {0.5, 0.5, 0.0}, 2};
  }
  const double d = 0.5 * std::sqrt(0.6);
  return {{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0}, 3};
}

// Bilinear shape functions for the vertex order p00, p10, p11, p01.
std::array<double, 4> q1_shape(double s, double t) {
  return {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
}

std::array<std::array<double, 2>, 4> q1_shape_grad(double s, double t) {
  return {{{-(1 - t), -(1 - s)}, {1 - t, -s}, {t, s}, {-t, 1 - s}}};
}

// Physical gradients of the Q1 shape functions at (s, t); returns det J.
double q1_physical_grad(std::span<const std::array<double, 2>> v, double s, double t,
                        std::array<std::array<double, 2>, 4>& grad) {
  const auto dn = q1_shape_grad(s, t);
  double j00 = 0, j01 = 0, j10 = 0, j11 = 0;  // d(x, y) / d(s, t)
  for (int a = 0; a < 4; ++a) {
    j00 += v[a][0] * dn[a][0];
    j01 += v[a][0] * dn[a][1];
    j10 += v[a][1] * dn[a][0];
    j11 += v[a][1] * dn[a][1];
  }
  const double det = j00 * j11 - j01 * j10;
  if (!(det > 0.0)) throw DataError("degenerate or clockwise Q1 element");
  for (int a = 0; a < 4; ++a) {
    grad[a][0] = (j11 * dn[a][0] - j10 * dn[a][1]) / det;
    grad[a][1] = (-j01 * dn[a][0] + j00 * dn[a][1]) / det;
  }
  return det;
}

double p1_area(std::span<const std::array<double, 2>> v) {
  const double a = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
  if (!(a > 0.0)) throw DataError("degenerate or clockwise P1 element");
  return a;
}

std::array<std::array<double, 2>, 3> p1_grad(std::span<const std::array<double, 2>> v, double area) {
  std::array<std::array<double, 2>, 3> g;
  for (int a = 0; a < 3; ++a) {
    const auto& pb = v[(a + 1) % 3];
    const auto& pc = v[(a + 2) % 3];
    g[a] = {(pb[1] - pc[1]) / (2 * area), (pc[0] - pb[0]) / (2 * area)};
  }
  return g;
}

void check_vertices(std::span<const std::array<double, 2>> v, ElementKind kind) {
  const std::size_t want = kind == ElementKind::triangular ? 3 : 4;
  if (v.size() != want) throw UsageError("wrong vertex count for element kind");
}

std::vector<std::array<double, 2>> element_vertices(const Mesh& mesh, std::size_t e) {
  std::vector<std::array<double, 2>> v;
  for (int a = 0; a < mesh.vertices_per_element(); ++a) v.push_back(mesh.nodes[mesh.elements[e][a]]);
  return v;
}

}  // namespace

DenseMatrix local_stiffness(std::span<const std::array<double, 2>> v, ElementKind kind) {
  check_vertices(v, kind);
  if (kind == ElementKind::triangular) {
    const double area = p1_area(v);
    const auto g = p1_grad(v, area);
    DenseMatrix k(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) k(a, b) = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
    return k;
  }
  DenseMatrix k(4, 4);
  const Rule r = gauss(2);
  std::array<std::array<double, 2>, 4> g;
  for (int qi = 0; qi < r.n; ++qi)
    for (int qj = 0; qj < r.n; ++qj) {
      const double w = r.w[qi] * r.w[qj] * q1_physical_grad(v, r.x[qi], r.x[qj], g);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) k(a, b) += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
    }
  return k;
}

DenseMatrix local_mass(std::span<const std::array<double, 2>> v, ElementKind kind) {
  check_vertices(v, kind);
  if (kind == ElementKind::triangular) {
    const double area = p1_area(v);
    DenseMatrix m(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) m(a, b) = area / 12.0 * (a == b ? 2.0 : 1.0);
    return m;
  }
  DenseMatrix m(4, 4);
  const Rule r = gauss(3);
  std::array<std::array<double, 2>, 4> g;
  for (int qi = 0; qi < r.n; ++qi)
    for (int qj = 0; qj < r.n; ++qj) {
      const double s = r.x[qi], t = r.x[qj];
      const double w = r.w[qi] * r.w[qj] * q1_physical_grad(v, s, t, g);
      const auto n = q1_shape(s, t);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) m(a, b) += w * n[a] * n[b];
    }
  return m;
}

FemOperator make_fem_operator(std::shared_ptr<const Mesh> mesh, ProblemKind kind, double kappa) {
  if (!mesh) throw UsageError("null mesh");
  FemOperator op;
  op.mesh = mesh;
  op.kind = kind;
  op.kappa = kind == ProblemKind::helmholtz ? kappa : 0.0;
  const int nn = static_cast<int>(mesh->grid.size());
  const int nv = mesh->vertices_per_element();

  std::vector<Triplet> ka, ma;
  ka.reserve(mesh->elements.size() * nv * nv);
  ma.reserve(mesh->elements.size() * nv * nv);
  for (std::size_t e = 0; e < mesh->elements.size(); ++e) {
    const auto verts = element_vertices(*mesh, e);
    const DenseMatrix k = local_stiffness(verts, mesh->kind);
    const DenseMatrix m = local_mass(verts, mesh->kind);
    const auto& el = mesh->elements[e];
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b) {
        ka.push_back({el[a], el[b], k(a, b)});
        ma.push_back({el[a], el[b], m(a, b)});
      }
  }
  op.stiffness_full = CsrMatrix::from_triplets(nn, nn, std::move(ka));
  op.mass_full = CsrMatrix::from_triplets(nn, nn, std::move(ma));

  op.dirichlet_nodes = mesh->dirichlet_nodes;
  std::vector<std::uint8_t> constrained(mesh->grid.size(), 0);
  for (int p : op.dirichlet_nodes) constrained[p] = 1;
  op.free_map.assign(mesh->grid.size(), -1);
  for (int p = 0; p < nn; ++p)
    if (mesh->node_active[p] && !constrained[p]) {
      op.free_map[p] = static_cast<int>(op.free_nodes.size());
      op.free_nodes.push_back(p);
    }
  if (op.free_nodes.empty()) throw DataError("FE system has no free degrees of freedom");

  op.stiffness = op.stiffness_full.submatrix(op.free_nodes, op.free_nodes);
  op.mass = op.mass_full.submatrix(op.free_nodes, op.free_nodes);
  const double k2 = op.kappa * op.kappa;
  const CsrMatrix system_full =
      k2 == 0.0 ? op.stiffness_full : CsrMatrix::add(1.0, op.stiffness_full, -k2, op.mass_full);
  op.system = system_full.submatrix(op.free_nodes, op.free_nodes);
  op.coupling = system_full.submatrix(op.free_nodes, op.dirichlet_nodes);

  if (kind == ProblemKind::helmholtz) {
    const DefinitenessReport rep = check_definiteness(op);
    if (!rep.positive_definite)
      throw NumericalError("Helmholtz system matrix is not positive definite (kappa^2 = " +
                           std::to_string(rep.kappa_squared) + ")");
  }
  return op;
}

FemSystem assemble_system(std::shared_ptr<const FemOperator> op, const ProblemSample& s) {
  if (!op) throw UsageError("null FE operator");
  const Mesh& mesh = *op->mesh;
  const std::size_t nn = mesh.grid.size();
  if (s.f.size() != nn || s.g_d.size() != nn || s.g_n.size() != nn)
    throw DataError("sample grid does not match the mesh");

  FemSystem sys;
  sys.op = op;
  const double sign = op->kind == ProblemKind::helmholtz ? -1.0 : 1.0;
  std::vector<double> b1_full = op->mass_full.multiply(s.f);
  for (double& v : b1_full) v *= sign;

  const Rule r = gauss(2);
  std::vector<std::uint8_t> on_dirichlet(nn, 0);
  for (int p : mesh.dirichlet_nodes) on_dirichlet[p] = 1;
  for (const auto& edge : mesh.neumann_edges) {
    const auto& pa = mesh.nodes[edge[0]];
    const auto& pb = mesh.nodes[edge[1]];
    const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
    // g_N lives on M_N only; an endpoint at a Dirichlet corner copies its neighbour.
    const bool na = !on_dirichlet[edge[0]], nb = !on_dirichlet[edge[1]];
    const double ga = na ? s.g_n[edge[0]] : s.g_n[edge[1]];
    const double gb = nb ? s.g_n[edge[1]] : s.g_n[edge[0]];
    for (int q = 0; q < r.n; ++q) {
      const double t = r.x[q];
      const double g = ga * (1 - t) + gb * t;
      b1_full[edge[0]] += len * r.w[q] * g * (1 - t);
      b1_full[edge[1]] += len * r.w[q] * g * t;
    }
  }

  sys.b1 = free_values(*op, b1_full);
  sys.dirichlet_values.resize(op->dirichlet_nodes.size());
  for (std::size_t k = 0; k < op->dirichlet_nodes.size(); ++k) sys.dirichlet_values[k] = s.g_d[op->dirichlet_nodes[k]];
  sys.b2 = op->coupling.multiply(sys.dirichlet_values);
  for (double& v : sys.b2) v = -v;
  sys.b.resize(sys.b1.size());
  for (std::size_t k = 0; k < sys.b.size(); ++k) sys.b[k] = sys.b1[k] + sys.b2[k];
  return sys;
}

double FeFunction::evaluate(double x, double y) const {
  const GridSpec& g = mesh->grid;
  const int nc = g.n - 1;
  const double hx = (g.x_max - g.x_min) / nc, hy = (g.y_max - g.y_min) / nc;
  const double fx = (x - g.x_min) / hx, fy = (y - g.y_min) / hy;
  constexpr double tol = 1e-9;
  const int ci0 = static_cast<int>(std::floor(fx)), cj0 = static_cast<int>(std::floor(fy));
  // A point on a cell edge may belong to any adjacent active cell.
  for (int dj = 0; dj >= -1; --dj)
    for (int di = 0; di >= -1; --di) {
      const int ci = ci0 + di, cj = cj0 + dj;
      if (ci < 0 || cj < 0 || ci >= nc || cj >= nc) continue;
      const double s = fx - ci, t = fy - cj;
      if (s < -tol || s > 1 + tol || t < -tol || t > 1 + tol) continue;
      if (!mesh->cell_active[static_cast<std::size_t>(cj) * nc + ci]) continue;
      const double u00 = coefficients[g.index(ci, cj)], u10 = coefficients[g.index(ci + 1, cj)];
      const double u11 = coefficients[g.index(ci + 1, cj + 1)], u01 = coefficients[g.index(ci, cj + 1)];
      if (mesh->kind == ElementKind::rectangular) {
        const auto n = q1_shape(s, t);
        return n[0] * u00 + n[1] * u10 + n[2] * u11 + n[3] * u01;
      }
      if (s >= t) return u00 + s * (u10 - u00) + t * (u11 - u10);
      return u00 + t * (u01 - u00) + s * (u11 - u01);
    }
  throw DataError("evaluation point (" + std::to_string(x) + ", " + std::to_string(y) +
                  ") is not covered by the mesh");
}

std::vector<double> free_values(const FemOperator& op, std::span<const double> field) {
  std::vector<double> v(op.free_nodes.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = field[op.free_nodes[k]];
  return v;
}

FeFunction make_fe_function(const FemSystem& sys, std::span<const double> free) {
  const FemOperator& op = *sys.op;
  if (free.size() != op.dofs()) throw UsageError("free vector has wrong length");
  FeFunction u;
  u.mesh = op.mesh;
  u.coefficients.assign(op.mesh->grid.size(), 0.0);
  for (std::size_t k = 0; k < free.size(); ++k) u.coefficients[op.free_nodes[k]] = free[k];
  for (std::size_t k = 0; k < op.dirichlet_nodes.size(); ++k)
    u.coefficients[op.dirichlet_nodes[k]] = sys.dirichlet_values[k];
  return u;
}

FeFunction solve_fem(const FemSystem& sys, const CgOptions& opts) {
  CgResult cg = cg_solve(sys.op->system, sys.b, opts);
  if (!cg.converged)
    throw NumericalError("FE solve did not converge: residual " + std::to_string(cg.residual_norm));
  return make_fe_function(sys, cg.x);
}

double fem_loss(std::span<const double> u, const FemSystem& sys) {
  if (u.size() != sys.b.size()) throw UsageError("prediction length does not match the FE system");
  const std::vector<double> au = sys.op->system.multiply(u);
  double s = 0.0;
  for (std::size_t k = 0; k < au.size(); ++k) {
    const double r = sys.b[k] - au[k];
    s += r * r;
  }
  return s;
}

double fem_loss_gradient(std::span<const double> u, const FemSystem& sys, std::span<double> grad, double scale) {
  if (u.size() != sys.b.size() || grad.size() != sys.b.size())
    throw UsageError("prediction length does not match the FE system");
  const std::vector<double> au = sys.op->system.multiply(u);
  std::vector<double> r(au.size());
  double s = 0.0;
  for (std::size_t k = 0; k < au.size(); ++k) {
    r[k] = sys.b[k] - au[k];
    s += r[k] * r[k];
  }
  // d/du ||b - A u||^2 = -2 A^T r, A symmetric.
  const std::vector<double> ar = sys.op->system.multiply(r);
  for (std::size_t k = 0; k < ar.size(); ++k) grad[k] -= 2.0 * scale * ar[k];
  return s;
}

double fem_total_loss(std::span<const FemSystem> systems, std::span<const std::vector<double>> predictions) {
  if (systems.empty()) throw UsageError("empty batch");
  if (systems.size() != predictions.size()) throw UsageError("batch size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < systems.size(); ++k) s += fem_loss(predictions[k], systems[k]);
  return s / static_cast<double>(systems.size());
}

FeFunction superpose(const FeFunction& a, const FeFunction& b) {
  if (a.mesh != b.mesh &&
      (!a.mesh || !b.mesh || a.mesh->grid.n != b.mesh->grid.n || a.mesh->kind != b.mesh->kind ||
       a.mesh->cell_active != b.mesh->cell_active))
    throw UsageError("superpose: FE functions live on different meshes");
  FeFunction c;
  c.mesh = a.mesh;
  c.coefficients.resize(a.coefficients.size());
  for (std::size_t k = 0; k < c.coefficients.size(); ++k) c.coefficients[k] = a.coefficients[k] + b.coefficients[k];
  return c;
}

Field dof_image(const FemOperator& op, std::span<const double> v) {
  if (v.size() != op.dofs()) throw UsageError("dof vector has wrong length");
  Field img(op.mesh->grid.size(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) img[op.free_nodes[k]] = v[k];
  return img;
}

double gradient_energy(const Mesh& mesh, std::span<const double> c) {
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto v = element_vertices(mesh, e);
    const auto& el = mesh.elements[e];
    if (mesh.kind == ElementKind::triangular) {
      const double area = p1_area(v);
      const auto g = p1_grad(v, area);
      double gx = 0, gy = 0;
      for (int a = 0; a < 3; ++a) {
        gx += c[el[a]] * g[a][0];
        gy += c[el[a]] * g[a][1];
      }
      total += area * (gx * gx + gy * gy);
      continue;
    }
    const Rule r = gauss(2);
    std::array<std::array<double, 2>, 4> g;
    for (int qi = 0; qi < r.n; ++qi)
      for (int qj = 0; qj < r.n; ++qj) {
        const double w = r.w[qi] * r.w[qj] * q1_physical_grad(v, r.x[qi], r.x[qj], g);
        double gx = 0, gy = 0;
        for (int a = 0; a < 4; ++a) {
          gx += c[el[a]] * g[a][0];
          gy += c[el[a]] * g[a][1];
        }
        total += w * (gx * gx + gy * gy);
      }
  }
  return total;
}

double l2_energy(const Mesh& mesh, std::span<const double> c) {
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto v = element_vertices(mesh, e);
    const auto& el = mesh.elements[e];
    if (mesh.kind == ElementKind::triangular) {
      // Edge-midpoint rule, exact for quadratics.
      const double area = p1_area(v);
      const double u0 = c[el[0]], u1 = c[el[1]], u2 = c[el[2]];
      const double m01 = 0.5 * (u0 + u1), m12 = 0.5 * (u1 + u2), m20 = 0.5 * (u2 + u0);
      total += area / 3.0 * (m01 * m01 + m12 * m12 + m20 * m20);
      continue;
    }
    const Rule r = gauss(3);
    std::array<std::array<double, 2>, 4> g;
    for (int qi = 0; qi < r.n; ++qi)
      for (int qj = 0; qj < r.n; ++qj) {
        const double s = r.x[qi], t = r.x[qj];
        const double w = r.w[qi] * r.w[qj] * q1_physical_grad(v, s, t, g);
        const auto n = q1_shape(s, t);
        double u = 0;
        for (int a = 0; a < 4; ++a) u += c[el[a]] * n[a];
        total += w * u * u;
      }
  }
  return total;
}

DefinitenessReport check_definiteness(const FemOperator& op) {
  DefinitenessReport rep;
  rep.kappa_squared = op.kappa * op.kappa;
  rep.stiffness_lambda_min = min_eigenvalue_spd(op.stiffness).value;
  const auto offs = op.mass.row_offsets();
  const auto vals = op.mass.values();
  for (int i = 0; i < op.mass.rows(); ++i) {
    double s = 0.0;
    for (int k = offs[i]; k < offs[i + 1]; ++k) s += std::abs(vals[k]);
    rep.mass_lambda_max_bound = std::max(rep.mass_lambda_max_bound, s);
  }
  const bool certified = rep.kappa_squared * rep.mass_lambda_max_bound < rep.stiffness_lambda_min;
  try {
    rep.system_lambda_min = rep.kappa_squared == 0.0 ? rep.stiffness_lambda_min : min_eigenvalue_spd(op.system).value;
  } catch (const NumericalError&) {
    rep.system_lambda_min = 0.0;
  }
  rep.positive_definite = certified && rep.system_lambda_min > 0.0;
  return rep;
}

double mass_lambda_min(const FemOperator& op) {
  const EigenEstimate est = min_eigenvalue_spd(op.mass);
  if (!est.converged) throw NumericalError("mass-matrix eigenvalue iteration did not converge");
  return est.value;
}

FemTheoremReport fem_theorem_check(std::span<const double> u, const FemSystem& sys, double lambda_min_mass,
                                   std::span<const double> solution) {
  for (double v : sys.dirichlet_values)
    if (v != 0.0) throw UsageError("FE theorem check requires homogeneous Dirichlet data");
  const FemOperator& op = *sys.op;
  if (u.size() != op.dofs() || solution.size() != op.dofs()) throw UsageError("vector length mismatch");

  std::vector<double> e(u.size()), r(u.size());
  const std::vector<double> au = op.system.multiply(u);
  for (std::size_t k = 0; k < u.size(); ++k) {
    e[k] = solution[k] - u[k];
    r[k] = sys.b[k] - au[k];
  }
  FemTheoremReport rep;
  rep.energy = dot(e, op.stiffness.multiply(e));
  rep.residual_norm = norm2(r);
  rep.cauchy_schwarz_rhs = norm2(e) * rep.residual_norm;
  rep.cauchy_schwarz_holds = rep.energy <= rep.cauchy_schwarz_rhs * (1.0 + 1e-10) + 1e-300;
  rep.coeff_norm_sq = dot(e, e);
  rep.mass_bound = dot(e, op.mass.multiply(e)) / lambda_min_mass;
  rep.mass_bound_holds = rep.coeff_norm_sq <= rep.mass_bound * (1.0 + 1e-10) + 1e-300;
  rep.chain_constant = rep.residual_norm > 0.0 ? std::sqrt(std::max(rep.energy, 0.0)) * op.mesh->grid.h / rep.residual_norm : 0.0;
  return rep;
}

}  // namespace nicon
