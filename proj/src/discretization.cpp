#include "nicon/discretization.hpp"

#include "nicon/error.hpp"

namespace nicon {

std::string to_string(Method m) {
  switch (m) {
    case Method::fd5: return "fd5";
    case Method::fd9: return "fd9";
    case Method::fe_tri: return "fe_tri";
    case Method::fe_rect: return "fe_rect";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "fd5") return Method::fd5;
  if (s == "fd9") return Method::fd9;
  if (s == "fe_tri") return Method::fe_tri;
  if (s == "fe_rect") return Method::fe_rect;
  throw UsageError("unknown method '" + s + "'");
}

bool is_fd(Method m) { return m == Method::fd5 || m == Method::fd9; }

Discretization::Discretization(Method method, const DatasetGeometry& geometry, ProblemKind kind, double kappa,
                               LossWeights weights)
    : method_(method), geo_(geometry), kind_(kind), kappa_(kappa), weights_(weights) {
  const GridSpec& g = geo_.domain.grid;
  if (is_fd(method)) {
    if (kind == ProblemKind::helmholtz) throw UsageError("FD residual losses are implemented for Poisson only");
    stencil_ = Stencil::make(method == Method::fd5 ? StencilKind::five_point : StencilKind::nine_point, g.h);
    mesh_ = std::make_shared<const Mesh>(build_mesh(geo_.domain, geo_.masks, ElementKind::rectangular));
    return;
  }
  const ElementKind ek = method == Method::fe_tri ? ElementKind::triangular : ElementKind::rectangular;
  mesh_ = std::make_shared<const Mesh>(build_mesh(geo_.domain, geo_.masks, ek));
  op_ = std::make_shared<const FemOperator>(make_fem_operator(mesh_, kind, kappa));
}

int Discretization::input_channels(Formulation form) const {
  if (!is_fd(method_)) return 1;
  const int gn = geo_.masks.neumann_links.empty() ? 0 : 1;
  switch (form) {
    case Formulation::original: return 2 + gn;
    case Formulation::subproblem1: return 1 + gn;
    case Formulation::subproblem2: return 1;
  }
  return 0;
}

PreparedSet Discretization::prepare(std::span<const ProblemSample> samples, Formulation form) const {
  PreparedSet set;
  set.formulation = form;
  set.samples.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.f.size() != grid().size()) throw DataError("sample grid does not match the discretization");
    set.samples.push_back(restrict_to(s, form));
  }
  if (!is_fd(method_)) {
    set.systems.reserve(samples.size());
    for (const auto& s : set.samples) set.systems.push_back(assemble_system(op_, s));
  }
  return set;
}

Tensor Discretization::inputs(const PreparedSet& set, std::span<const std::size_t> idx) const {
  const int n = grid().n;
  const int c = input_channels(set.formulation);
  Tensor x(static_cast<int>(idx.size()), c, n, n);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    auto put = [&](int ch, std::span<const double> img) {
      std::copy(img.begin(), img.end(), x.data.begin() + x.offset(static_cast<int>(b), ch, 0, 0));
    };
    const std::size_t k = idx[b];
    if (!is_fd(method_)) {
      const FemSystem& sys = set.systems[k];
      const auto& v = set.formulation == Formulation::subproblem1   ? sys.b1
                      : set.formulation == Formulation::subproblem2 ? sys.b2
                                                                    : sys.b;
      put(0, dof_image(*op_, v));
      continue;
    }
    const ProblemSample& s = set.samples[k];
    const bool gn = !geo_.masks.neumann_links.empty();
    int ch = 0;
    if (set.formulation != Formulation::subproblem2) put(ch++, s.f);
    if (set.formulation != Formulation::subproblem1) put(ch++, s.g_d);
    if (set.formulation != Formulation::subproblem2 && gn) put(ch++, s.g_n);
  }
  return x;
}

double Discretization::sample_loss(const PreparedSet& set, std::size_t k, std::span<const double> u) const {
  if (is_fd(method_)) {
    const ProblemSample& s = set.samples[k];
    return fd_sample_loss(u, s.f, s.g_d, s.g_n, stencil_, geo_.masks, grid(), weights_).total;
  }
  return fem_loss(free_values(*op_, u), set.systems[k]);
}

double Discretization::loss(const PreparedSet& set, std::span<const std::size_t> idx, const Tensor& pred,
                            Tensor* grad) const {
  const std::size_t nn = grid().size();
  if (pred.c != 1 || pred.n != static_cast<int>(idx.size()) || pred.h != grid().n || pred.w != grid().n)
    throw UsageError("prediction shape does not match the batch");
  if (idx.empty()) throw UsageError("empty batch");
  if (grad) *grad = Tensor(pred.n, 1, pred.h, pred.w);
  const double scale = 1.0 / static_cast<double>(idx.size());
  double total = 0.0;
  for (std::size_t b = 0; b < idx.size(); ++b) {
    std::span<const double> u(pred.data.data() + b * nn, nn);
    const std::size_t k = idx[b];
    if (is_fd(method_)) {
      const ProblemSample& s = set.samples[k];
      if (grad) {
        std::span<double> g(grad->data.data() + b * nn, nn);
        total += fd_loss_gradient(u, s.f, s.g_d, s.g_n, stencil_, geo_.masks, grid(), weights_, g, scale).total;
      } else {
        total += fd_sample_loss(u, s.f, s.g_d, s.g_n, stencil_, geo_.masks, grid(), weights_).total;
      }
      continue;
    }
    const std::vector<double> uf = free_values(*op_, u);
    if (grad) {
      std::vector<double> gf(uf.size(), 0.0);
      total += fem_loss_gradient(uf, set.systems[k], gf, scale);
      for (std::size_t d = 0; d < gf.size(); ++d) grad->data[b * nn + op_->free_nodes[d]] = gf[d];
    } else {
      total += fem_loss(uf, set.systems[k]);
    }
  }
  return total * scale;
}

Field Discretization::postprocess(const PreparedSet& set, std::size_t k, std::span<const double> image) const {
  if (is_fd(method_)) {
    Field u = postprocess_dirichlet(image, set.samples[k].g_d, geo_.masks);
    for (std::size_t p = 0; p < u.size(); ++p)
      if (!geo_.domain.inside.at(p)) u[p] = 0.0;
    return u;
  }
  return make_fe_function(set.systems[k], free_values(*op_, image)).coefficients;
}

Field Discretization::classical(const PreparedSet& set, std::size_t k) const {
  if (is_fd(method_)) return solve_fd(set.samples[k], stencil_, geo_.masks, grid());
  return solve_fem(set.systems[k]).coefficients;
}

FeFunction Discretization::as_function(Field values) const {
  if (values.size() != grid().size()) throw UsageError("field size does not match the grid");
  return FeFunction{mesh_, std::move(values)};
}

}  // namespace nicon
