#include "nicon/metrics.hpp"

#include <cmath>

#include "nicon/error.hpp"

namespace nicon {

double discrete_l2(std::span<const double> v, double h) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(h * h * s);
}

double discrete_h1_seminorm(std::span<const double> v, const BoundaryMasks& m, const GridSpec& g) {
  if (v.size() != g.size()) throw UsageError("field size does not match the grid");
  auto at = [&](int i, int j) {
    if (!g.contains(i, j) || !m.interior(i, j)) return 0.0;
    return v[g.index(i, j)];
  };
  double s = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      if (!m.interior(i, j)) continue;
      const double c = at(i, j);
      const double dx = (at(i + 1, j) - c) / g.h;
      const double dy = (at(i, j + 1) - c) / g.h;
      s += dx * dx + dy * dy;
    }
  return std::sqrt(g.h * g.h * s);
}

Field prolong_bilinear(const FeFunction& coarse, const DomainMask& fine) {
  const GridSpec& g = fine.grid;
  Field out(g.size(), 0.0);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      if (fine.inside(i, j)) out[g.index(i, j)] = coarse.evaluate(g.x(i), g.y(j));
  return out;
}

FeFunction fine_function(std::shared_ptr<const Mesh> fine_mesh, Field values) {
  if (values.size() != fine_mesh->grid.size()) throw UsageError("reference field size does not match its mesh");
  return FeFunction{std::move(fine_mesh), std::move(values)};
}

int reference_size(int n) {
  if (n < 3) throw UsageError("grid too small");
  const int k = (256 + (n - 2)) / (n - 1);
  return (n - 1) * k + 1;
}

double H1Parts::full() const { return std::sqrt(l2_sq + semi_sq); }

H1Parts h1_difference(const FeFunction& pred, const FeFunction& ref) {
  const Mesh& fm = *ref.mesh;
  if (fm.kind != ElementKind::rectangular) throw UsageError("reference must be a Q1 function");
  const GridSpec& g = fm.grid;
  Field d(g.size(), 0.0);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const int p = g.index(i, j);
      if (!fm.node_active[p]) continue;
      d[p] = pred.mesh ? ref.coefficients[p] - pred.evaluate(g.x(i), g.y(j)) : ref.coefficients[p];
    }
  return {l2_energy(fm, d), gradient_energy(fm, d)};
}

double relative_h1_error(const FeFunction& pred, const FeFunction& ref) {
  const H1Parts r = h1_difference(FeFunction{}, ref);
  const double denom = r.full();
  if (!(denom > 0.0)) throw DataError("reference solution has zero H1 norm");
  return h1_difference(pred, ref).full() / denom;
}

NormReport norm_report(const FeFunction& pred, const FeFunction& ref, const BoundaryMasks& masks) {
  NormReport rep;
  const GridSpec& g = pred.mesh->grid;
  Field e(g.size(), 0.0);
  std::vector<double> e_int;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      if (!masks.interior(i, j)) continue;
      const int p = g.index(i, j);
      e[p] = ref.evaluate(g.x(i), g.y(j)) - pred.coefficients[p];
      e_int.push_back(e[p]);
    }
  rep.l2_discrete = discrete_l2(e_int, g.h);
  rep.h1_seminorm_discrete = discrete_h1_seminorm(e, masks, g);
  const H1Parts diff = h1_difference(pred, ref);
  rep.l2_continuous = std::sqrt(diff.l2_sq);
  rep.h1_seminorm_continuous = std::sqrt(diff.semi_sq);
  rep.h1_full = diff.full();
  const double denom = h1_difference(FeFunction{}, ref).full();
  if (!(denom > 0.0)) throw DataError("reference solution has zero H1 norm");
  rep.relative_h1 = rep.h1_full / denom;
  return rep;
}

}  // namespace nicon
