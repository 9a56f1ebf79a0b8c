#include "nicon/fd.hpp"

#include <cmath>
#include <string>

#include "nicon/error.hpp"
#include "nicon/metrics.hpp"

namespace nicon {

Stencil Stencil::make(StencilKind kind, double h) {
  Stencil s;
  s.kind = kind;
  if (kind == StencilKind::five_point) {
    s.kernel = {0, 1, 0, 1, -4, 1, 0, 1, 0};
    s.alpha = 1.0 / (h * h);
  } else {
    s.kernel = {1, 4, 1, 4, -20, 4, 1, 4, 1};
    s.alpha = 1.0 / (6.0 * h * h);
  }
  return s;
}

int Stencil::sum_of_squares() const {
  int s = 0;
  for (int w : kernel) s += w * w;
  return s;
}

namespace {

bool is_inside(const BoundaryMasks& m, std::size_t p) {
  return m.interior.at(p) || m.dirichlet.at(p) || m.neumann.at(p);
}

// K * u at pixel (i, j) of the interior mask.
double convolve_at(std::span<const double> u, const Stencil& st, const BoundaryMasks& m,
                   const GridSpec& g, int i, int j) {
  double s = 0.0;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int w = st.weight(di, dj);
      if (w == 0) continue;
      const int ii = i + di, jj = j + dj;
      if (!g.contains(ii, jj) || !is_inside(m, g.index(ii, jj)))
        throw DataError("stencil at interior pixel (" + std::to_string(i) + "," + std::to_string(j) +
                        ") touches a pixel outside the domain");
      s += w * u[g.index(ii, jj)];
    }
  return s;
}

void check_size(std::span<const double> v, const GridSpec& g, const char* what) {
  if (v.size() != g.size())
    throw UsageError(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                     std::to_string(g.size()));
}

}  // namespace

Field laplace_apply(std::span<const double> u, const Stencil& st, const BoundaryMasks& m,
                    const GridSpec& g) {
  check_size(u, g, "field");
  Field out(g.size(), 0.0);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      if (m.interior(i, j)) out[g.index(i, j)] = st.alpha * convolve_at(u, st, m, g, i, j);
  return out;
}

double fd_interior_loss(std::span<const double> u, std::span<const double> f, const Stencil& st,
                        const BoundaryMasks& m, const GridSpec& g) {
  check_size(u, g, "prediction");
  check_size(f, g, "source");
  const std::size_t count = m.interior.count();
  if (count == 0) throw DataError("interior mask is empty");
  double s = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      if (!m.interior(i, j)) continue;
      const double r = convolve_at(u, st, m, g, i, j) + f[g.index(i, j)] / st.alpha;
      s += r * r;
    }
  return s / static_cast<double>(count);
}

double fd_dirichlet_loss(std::span<const double> u, std::span<const double> g_d, const BoundaryMasks& m) {
  const std::size_t count = m.dirichlet.count();
  if (count == 0) throw DataError("Dirichlet mask is empty");
  double s = 0.0;
  for (std::size_t p = 0; p < m.dirichlet.size(); ++p) {
    if (!m.dirichlet.at(p)) continue;
    const double r = u[p] - g_d[p];
    s += r * r;
  }
  return s / static_cast<double>(count);
}

double fd_neumann_loss(std::span<const double> u, std::span<const double> g_n, const BoundaryMasks& m,
                       double h) {
  if (m.neumann_links.empty()) return 0.0;
  double s = 0.0;
  for (const auto& link : m.neumann_links) {
    const double r = u[link.inner] - u[link.node] + h * g_n[link.node];
    s += r * r;
  }
  return s / static_cast<double>(m.neumann_links.size());
}

LossBreakdown fd_sample_loss(std::span<const double> u, std::span<const double> f,
                             std::span<const double> g_d, std::span<const double> g_n, const Stencil& st,
                             const BoundaryMasks& m, const GridSpec& g, const LossWeights& w) {
  LossBreakdown lb;
  lb.weights = w;
  lb.l_f = fd_interior_loss(u, f, st, m, g);
  lb.l_d = fd_dirichlet_loss(u, g_d, m);
  lb.l_n = fd_neumann_loss(u, g_n, m, g.h);
  lb.total = w.f * lb.l_f + w.d * lb.l_d + w.n * lb.l_n;
  return lb;
}

LossBreakdown fd_loss_gradient(std::span<const double> u, std::span<const double> f,
                               std::span<const double> g_d, std::span<const double> g_n, const Stencil& st,
                               const BoundaryMasks& m, const GridSpec& g, const LossWeights& w,
                               std::span<double> grad, double scale) {
  check_size(u, g, "prediction");
  check_size(grad, g, "gradient");
  LossBreakdown lb;
  lb.weights = w;

  const auto n_f = static_cast<double>(m.interior.count());
  if (n_f == 0) throw DataError("interior mask is empty");
  const double cf = 2.0 * w.f / n_f * scale;
  double sf = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      if (!m.interior(i, j)) continue;
      const double r = convolve_at(u, st, m, g, i, j) + f[g.index(i, j)] / st.alpha;
      sf += r * r;
      // Adjoint of the convolution scatters r back through the stencil.
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int wt = st.weight(di, dj);
          if (wt != 0) grad[g.index(i + di, j + dj)] += cf * wt * r;
        }
    }
  lb.l_f = sf / n_f;

  const auto n_d = static_cast<double>(m.dirichlet.count());
  if (n_d == 0) throw DataError("Dirichlet mask is empty");
  const double cd = 2.0 * w.d / n_d * scale;
  double sd = 0.0;
  for (std::size_t p = 0; p < m.dirichlet.size(); ++p) {
    if (!m.dirichlet.at(p)) continue;
    const double r = u[p] - g_d[p];
    sd += r * r;
    grad[p] += cd * r;
  }
  lb.l_d = sd / n_d;

  if (!m.neumann_links.empty()) {
    const auto n_n = static_cast<double>(m.neumann_links.size());
    const double cn = 2.0 * w.n / n_n * scale;
    double sn = 0.0;
    for (const auto& link : m.neumann_links) {
      const double r = u[link.inner] - u[link.node] + g.h * g_n[link.node];
      sn += r * r;
      grad[link.inner] += cn * r;
      grad[link.node] -= cn * r;
    }
    lb.l_n = sn / n_n;
  }
  lb.total = w.f * lb.l_f + w.d * lb.l_d + w.n * lb.l_n;
  return lb;
}

LossBreakdown fd_total_loss(std::span<const ProblemSample> samples, std::span<const Field> predictions,
                            const Stencil& st, const BoundaryMasks& m, const GridSpec& g,
                            const LossWeights& w) {
  if (samples.empty()) throw UsageError("empty batch");
  if (samples.size() != predictions.size()) throw UsageError("batch size mismatch");
  LossBreakdown acc;
  acc.weights = w;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    LossBreakdown lb = fd_sample_loss(predictions[k], s.f, s.g_d, s.g_n, st, m, g, w);
    acc.l_f += lb.l_f;
    acc.l_d += lb.l_d;
    acc.l_n += lb.l_n;
    acc.total += lb.total;
  }
  const auto ns = static_cast<double>(samples.size());
  acc.l_f /= ns;
  acc.l_d /= ns;
  acc.l_n /= ns;
  acc.total /= ns;
  return acc;
}

Field postprocess_dirichlet(std::span<const double> u, std::span<const double> g_d, const BoundaryMasks& m) {
  Field out(u.begin(), u.end());
  for (std::size_t p = 0; p < m.dirichlet.size(); ++p)
    if (m.dirichlet.at(p)) out[p] = g_d[p];
  return out;
}

FdSystem assemble_fd(const ProblemSample& s, const Stencil& st, const BoundaryMasks& m, const GridSpec& g) {
  FdSystem sys;
  sys.unknown_map.assign(g.size(), -1);
  std::vector<int> interior_map(g.size(), -1);
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (m.interior.at(p) || m.neumann.at(p)) {
      sys.unknown_map[p] = static_cast<int>(sys.unknown_nodes.size());
      sys.unknown_nodes.push_back(static_cast<int>(p));
    }
    if (m.interior.at(p)) {
      interior_map[p] = static_cast<int>(sys.interior_nodes.size());
      sys.interior_nodes.push_back(static_cast<int>(p));
    }
  }
  if (sys.interior_nodes.empty()) throw DataError("no interior unknowns");

  std::vector<int> neumann_inner(g.size(), -1);
  for (const auto& link : m.neumann_links) neumann_inner[link.node] = link.inner;

  const int nu = static_cast<int>(sys.unknown_nodes.size());
  const int ni = static_cast<int>(sys.interior_nodes.size());
  std::vector<Triplet> full, red;
  sys.rhs.assign(static_cast<std::size_t>(nu), 0.0);
  sys.reduced_rhs.assign(static_cast<std::size_t>(ni), 0.0);

  for (int row = 0; row < nu; ++row) {
    const int p = sys.unknown_nodes[row];
    if (m.neumann.at(p)) {
      full.push_back({row, row, 1.0});
      full.push_back({row, sys.unknown_map[neumann_inner[p]], -1.0});
      sys.rhs[row] = g.h * s.g_n[p];
      continue;
    }
    const int i = p % g.n, j = p / g.n;
    const int rrow = interior_map[p];
    double rhs = s.f[p] / st.alpha;
    double rrhs = rhs;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int w = st.weight(di, dj);
        if (w == 0) continue;
        const int ii = i + di, jj = j + dj;
        if (!g.contains(ii, jj) || !is_inside(m, g.index(ii, jj)))
          throw DataError("stencil leaves the domain at interior pixel " + std::to_string(p));
        const int q = g.index(ii, jj);
        const double c = -w;
        if (m.dirichlet.at(q)) {
          rhs -= c * s.g_d[q];
          rrhs -= c * s.g_d[q];
        } else if (m.neumann.at(q)) {
          full.push_back({row, sys.unknown_map[q], c});
          // u_q = u_inner + h g_N
          red.push_back({rrow, interior_map[neumann_inner[q]], c});
          rrhs -= c * g.h * s.g_n[q];
        } else {
          full.push_back({row, sys.unknown_map[q], c});
          red.push_back({rrow, interior_map[q], c});
        }
      }
    sys.rhs[row] = rhs;
    sys.reduced_rhs[rrow] = rrhs;
  }
  sys.a = CsrMatrix::from_triplets(nu, nu, std::move(full));
  sys.reduced = CsrMatrix::from_triplets(ni, ni, std::move(red));
  return sys;
}

Field solve_fd(const ProblemSample& s, const Stencil& st, const BoundaryMasks& m, const GridSpec& g,
               const CgOptions& opts) {
  FdSystem sys = assemble_fd(s, st, m, g);
  CgResult cg = cg_solve(sys.reduced, sys.reduced_rhs, opts);
  if (!cg.converged)
    throw NumericalError("FD solve did not converge: residual " + std::to_string(cg.residual_norm));
  Field u(g.size(), 0.0);
  for (std::size_t r = 0; r < sys.interior_nodes.size(); ++r) u[sys.interior_nodes[r]] = cg.x[r];
  for (const auto& link : m.neumann_links) u[link.node] = u[link.inner] + g.h * s.g_n[link.node];
  for (std::size_t p = 0; p < g.size(); ++p)
    if (m.dirichlet.at(p)) u[p] = s.g_d[p];
  return u;
}

CsrMatrix fd_interior_operator(const Stencil& st, const BoundaryMasks& m, const GridSpec& g) {
  std::vector<Triplet> t;
  int row = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      if (!m.interior(i, j)) continue;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int w = st.weight(di, dj);
          if (w != 0) t.push_back({row, g.index(i + di, j + dj), static_cast<double>(w)});
        }
      ++row;
    }
  return CsrMatrix::from_triplets(row, static_cast<int>(g.size()), std::move(t));
}

CsrMatrix fd_interior_matrix(const Stencil& st, const BoundaryMasks& m, const GridSpec& g) {
  std::vector<int> map(g.size(), -1);
  int n = 0;
  for (std::size_t p = 0; p < g.size(); ++p)
    if (m.interior.at(p)) map[p] = n++;
  std::vector<Triplet> t;
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (map[p] < 0) continue;
    const int i = static_cast<int>(p) % g.n, j = static_cast<int>(p) / g.n;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int w = st.weight(di, dj);
        if (w == 0) continue;
        const int q = map[g.index(i + di, j + dj)];
        if (q >= 0) t.push_back({map[p], q, -st.alpha * w});
      }
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

FdTheoremReport fd_theorem_check(std::span<const double> u_hat, const ProblemSample& s, const Stencil& st,
                                 const BoundaryMasks& m, const GridSpec& g) {
  if (m.layout != BcLayout::all_dirichlet || !m.neumann_links.empty())
    throw UsageError("FD theorem check requires the all-Dirichlet layout");
  for (std::size_t p = 0; p < g.size(); ++p)
    if (m.dirichlet.at(p) && s.g_d[p] != 0.0)
      throw UsageError("FD theorem check requires homogeneous Dirichlet data");

  const CsrMatrix a_i = fd_interior_matrix(st, m, g);
  const std::vector<int> nodes = m.interior.indices();
  std::vector<double> f_i(nodes.size()), uh_i(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    f_i[r] = s.f[nodes[r]];
    uh_i[r] = u_hat[nodes[r]];
  }
  CgResult cg = cg_solve(a_i, f_i);
  if (!cg.converged) throw NumericalError("FD theorem check: reference solve did not converge");

  std::vector<double> e(nodes.size()), r(nodes.size());
  std::vector<double> au = a_i.multiply(uh_i);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    e[k] = cg.x[k] - uh_i[k];
    r[k] = f_i[k] - au[k];
  }
  Field e_full(g.size(), 0.0);
  for (std::size_t k = 0; k < nodes.size(); ++k) e_full[nodes[k]] = e[k];

  FdTheoremReport rep;
  const double h = g.h;
  rep.error_seminorm = discrete_h1_seminorm(e_full, m, g);
  // A~_I u - f / alpha = -(f - A_I u) / alpha
  rep.residual_norm = norm2(r) / st.alpha;
  rep.energy = h * h * dot(e, a_i.multiply(e));
  rep.cauchy_schwarz_rhs = h * discrete_l2(e, h) * norm2(r);
  rep.cauchy_schwarz_holds = rep.energy <= rep.cauchy_schwarz_rhs * (1.0 + 1e-12) + 1e-300;
  const double semi2 = rep.error_seminorm * rep.error_seminorm;
  rep.norm_ratio = semi2 > 0.0 ? rep.energy / semi2 : 0.0;
  rep.chain_constant = rep.residual_norm > 0.0 ? rep.error_seminorm / (rep.residual_norm / h) : 0.0;
  return rep;
}

}  // namespace nicon
