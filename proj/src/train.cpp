#include "nicon/train.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "nicon/error.hpp"
#include "nicon/optim.hpp"
#include "nicon/rng.hpp"

namespace nicon {

UNetConfig TrainConfig::network(int in_channels) const {
  if (c0 == 0 && levels == 0) return UNetConfig::resolution_rule(n, in_channels);
  UNetConfig c;
  c.n = n;
  c.in_channels = in_channels;
  c.c0 = c0 > 0 ? c0 : n / 2;
  c.levels = levels > 0 ? levels : std::max(1, static_cast<int>(std::log2(n)) - 2);
  c.desk = true;
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be at least 1");
  if (batch < 1) throw UsageError("batch must be at least 1");
  if (!(base_lr > 0.0)) throw UsageError("base_lr must be positive");
  if (n < 3) throw UsageError("N must be at least 3");
}

namespace {

// Fisher-Yates driven by splitmix64.
std::vector<std::size_t> shuffled(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = count; i > 1; --i) std::swap(idx[i - 1], idx[rng.next() % i]);
  return idx;
}

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1));
}

void check_data(const TrainConfig& cfg, const Discretization& disc, const PreparedSet& data) {
  cfg.validate();
  if (disc.grid().n != cfg.n) throw UsageError("dataset N does not match the training config");
  if (disc.method() != cfg.method) throw UsageError("discretization method does not match the training config");
  if (data.formulation != cfg.formulation) throw UsageError("prepared set formulation does not match the config");
  if (data.size() == 0) throw DataError("empty training set");
}

double full_loss(UNet& net, const Discretization& disc, const PreparedSet& data, int batch) {
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    idx.clear();
    for (std::size_t k = start; k < std::min(data.size(), start + batch); ++k) idx.push_back(k);
    const Tensor pred = net.forward(disc.inputs(data, idx));
    total += disc.loss(data, idx, pred, nullptr) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(data.size());
}

void check_loss(double loss, int epoch) {
  if (!std::isfinite(loss)) throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
}

using StopRule = std::function<bool(double best)>;

TrainResult run_training(const TrainConfig& cfg, const Discretization& disc, const PreparedSet& data,
                         int epochs, const StopRule& stop) {
  UNet net(cfg.network(disc.input_channels(cfg.formulation)), cfg.seed);
  const std::size_t count = data.size();
  const std::size_t bsz = std::min<std::size_t>(cfg.batch, count);
  const std::size_t batches = (count + bsz - 1) / bsz;
  const bool full_batch = batches == 1;
  const std::uint64_t total_steps = static_cast<std::uint64_t>(epochs) * batches;

  AdamState adam(net.param_count());
  TrainHistory hist;
  hist.best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = net.params();
  std::vector<double> grad;
  Tensor dpred;

  auto record = [&](double loss, int epoch) {
    check_loss(loss, epoch);
    hist.loss.push_back(loss);
    if (loss < hist.best_loss) {
      hist.best_loss = loss;
      hist.best_epoch = epoch;
      best_params = net.params();
    }
    if (cfg.log_every > 0 && epoch % cfg.log_every == 0)
      std::cerr << "epoch " << epoch << " loss " << loss << " best " << hist.best_loss << '\n';
  };

  std::uint64_t step = 0;
  int epoch = 0;
  for (; epoch < epochs; ++epoch) {
    const std::vector<std::size_t> order = full_batch ? shuffled(count, 0) : shuffled(count, epoch_seed(cfg.seed, epoch));
    if (!full_batch) {
      record(full_loss(net, disc, data, static_cast<int>(bsz)), epoch);
      if (stop && stop(hist.best_loss)) break;
    }
    for (std::size_t b = 0; b < batches; ++b) {
      std::span<const std::size_t> idx(order.data() + b * bsz, std::min(bsz, count - b * bsz));
      const Tensor pred = net.forward(disc.inputs(data, idx));
      const double loss = disc.loss(data, idx, pred, &dpred);
      if (full_batch) {
        record(loss, epoch);
        if (stop && stop(hist.best_loss)) break;
      }
      check_loss(loss, epoch);
      net.backward(dpred, grad);
      adam_step(net.params(), grad, adam, cosine_lr(step++, total_steps, cfg.base_lr));
    }
    if (stop && stop(hist.best_loss)) break;
  }
  if (epoch == epochs) record(full_loss(net, disc, data, static_cast<int>(bsz)), epoch);
  net.params() = best_params;
  return TrainResult{std::move(net), std::move(hist)};
}

// Linear least-squares form ||B x - c_k||^2 of the residual loss of every
// sample, with x the nodal values (FD: all pixels, FE: free dofs).
struct LeastSquares {
  CsrMatrix op;
  CsrMatrix op_t;
  std::vector<std::vector<double>> rhs;
};

LeastSquares least_squares(const Discretization& disc, const PreparedSet& data) {
  LeastSquares ls;
  if (!is_fd(disc.method())) {
    ls.op = disc.fem_operator()->system;
    for (const auto& sys : data.systems) ls.rhs.push_back(sys.b);
  } else {
    const BoundaryMasks& m = disc.masks();
    const GridSpec& g = disc.grid();
    const LossWeights& w = disc.weights();
    const CsrMatrix k = fd_interior_operator(disc.stencil(), m, g);
    const std::vector<int> d = m.dirichlet.indices();
    const double sf = std::sqrt(w.f / static_cast<double>(k.rows()));
    const double sd = d.empty() ? 0.0 : std::sqrt(w.d / static_cast<double>(d.size()));
    const double sn = m.neumann_links.empty() ? 0.0 : std::sqrt(w.n / static_cast<double>(m.neumann_links.size()));
    std::vector<Triplet> t;
    const int nf = k.rows();
    const auto ro = k.row_offsets();
    const auto ci = k.col_indices();
    const auto kv = k.values();
    for (int r = 0; r < nf; ++r)
      for (int q = ro[r]; q < ro[r + 1]; ++q) t.push_back({r, ci[q], sf * kv[q]});
    for (std::size_t r = 0; r < d.size(); ++r) t.push_back({nf + static_cast<int>(r), d[r], sd});
    const int off = nf + static_cast<int>(d.size());
    for (std::size_t r = 0; r < m.neumann_links.size(); ++r) {
      const NeumannLink& l = m.neumann_links[r];
      t.push_back({off + static_cast<int>(r), l.inner, sn});
      t.push_back({off + static_cast<int>(r), l.node, -sn});
    }
    const int rows = off + static_cast<int>(m.neumann_links.size());
    ls.op = CsrMatrix::from_triplets(rows, static_cast<int>(g.size()), t);
    const std::vector<int> fnodes = m.interior.indices();
    const double alpha = disc.stencil().alpha;
    for (const auto& s : data.samples) {
      std::vector<double> c(rows, 0.0);
      for (int r = 0; r < nf; ++r) c[r] = -sf * s.f[fnodes[r]] / alpha;
      for (std::size_t r = 0; r < d.size(); ++r) c[nf + r] = sd * s.g_d[d[r]];
      for (std::size_t r = 0; r < m.neumann_links.size(); ++r)
        c[off + r] = -sn * g.h * s.g_n[m.neumann_links[r].node];
      ls.rhs.push_back(std::move(c));
    }
  }
  ls.op_t = ls.op.transpose();
  return ls;
}

struct Cgls {
  std::vector<double> x, r, s, p, q;
  double gamma = 0.0;

  Cgls(const LeastSquares& ls, const std::vector<double>& c) : x(ls.op.cols(), 0.0), r(c) {
    s = ls.op_t.multiply(r);
    p = s;
    gamma = dot(s, s);
  }
  double loss() const { return dot(r, r); }
  void step(const LeastSquares& ls) {
    if (!(gamma > 0.0)) return;
    q = ls.op.multiply(p);
    const double qq = dot(q, q);
    if (!(qq > 0.0)) return;
    const double a = gamma / qq;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += a * p[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= a * q[i];
    s = ls.op_t.multiply(r);
    const double g = dot(s, s);
    const double beta = g / gamma;
    gamma = g;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
  }
};

TargetOutcome nodal_to_target(const Discretization& disc, const PreparedSet& data, double target, int max_epochs) {
  const LeastSquares ls = least_squares(disc, data);
  std::vector<Cgls> states;
  states.reserve(data.size());
  for (const auto& c : ls.rhs) states.emplace_back(ls, c);
  auto mean_loss = [&] {
    double t = 0.0;
    for (const auto& st : states) t += st.loss();
    return t / static_cast<double>(states.size());
  };

  TargetOutcome out;
  out.target = target;
  // The iterate loss is non-increasing under CGLS, so the current iterate is
  // the minimum-loss checkpoint.
  double loss = mean_loss();
  int epoch = 0;
  while (true) {
    check_loss(loss, epoch);
    ++epoch;
    if (loss <= target) {
      out.attained = true;
      break;
    }
    if (epoch >= max_epochs) break;
    for (auto& st : states) st.step(ls);
    loss = mean_loss();
  }
  out.epochs = epoch;
  out.best_loss = loss;
  out.predictions.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (is_fd(disc.method())) {
      out.predictions.push_back(disc.postprocess(data, k, states[k].x));
    } else {
      out.predictions.push_back(make_fe_function(data.systems[k], states[k].x).coefficients);
    }
  }
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Discretization& disc, const PreparedSet& data) {
  check_data(cfg, disc, data);
  return run_training(cfg, disc, data, cfg.epochs, {});
}

TargetOutcome train_to_target(const TrainConfig& cfg, const Discretization& disc, const PreparedSet& data,
                              double target, int max_epochs, Optimizer opt) {
  if (max_epochs < 1) throw UsageError("max_epochs must be at least 1");
  TrainConfig c = cfg;
  c.epochs = max_epochs;
  check_data(c, disc, data);
  if (opt == Optimizer::nodal) return nodal_to_target(disc, data, target, max_epochs);

  TrainResult res = run_training(c, disc, data, max_epochs, [target](double best) { return best <= target; });
  TargetOutcome out;
  out.target = target;
  out.best_loss = res.history.best_loss;
  out.attained = res.history.best_loss <= target;
  out.epochs = static_cast<int>(res.history.loss.size());
  out.network = std::move(res);
  return out;
}

double ScalingSchedule::target(int level) const { return base_loss / std::pow(factor, level); }

double ScalingSchedule::method_factor(Method m) { return is_fd(m) ? 64.0 : 16.0; }

Predictor network_predictor(UNet& net, const Discretization& disc, const PreparedSet& set) {
  return [&net, &disc, &set](std::size_t k) {
    const std::size_t idx[1] = {k};
    const Tensor pred = net.forward(disc.inputs(set, idx));
    return disc.postprocess(set, k, pred.data);
  };
}

Predictor zero_predictor(const Discretization& disc, const PreparedSet&) {
  const std::size_t nn = disc.grid().size();
  return [nn](std::size_t) { return Field(nn, 0.0); };
}

Predictor classical_predictor(const Discretization& disc, const PreparedSet& set) {
  return [&disc, &set](std::size_t k) { return disc.classical(set, k); };
}

Predictor compose(Predictor p1, Predictor p2) {
  return [p1 = std::move(p1), p2 = std::move(p2)](std::size_t k) {
    Field a = p1(k);
    const Field b = p2(k);
    if (a.size() != b.size()) throw UsageError("composed predictions differ in size");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  };
}

DecomposedModel train_decomposed(const TrainConfig& cfg1, const TrainConfig& cfg2, const Discretization& disc,
                                 std::span<const ProblemSample> samples) {
  if (cfg1.n != cfg2.n || cfg1.method != cfg2.method)
    throw UsageError("subproblem models must share N and method");
  if (cfg1.c0 != cfg2.c0 || cfg1.levels != cfg2.levels)
    throw UsageError("subproblem models must share the architecture");
  TrainConfig c1 = cfg1, c2 = cfg2;
  c1.formulation = Formulation::subproblem1;
  c2.formulation = Formulation::subproblem2;
  const PreparedSet s1 = disc.prepare(samples, Formulation::subproblem1);
  const PreparedSet s2 = disc.prepare(samples, Formulation::subproblem2);
  TrainResult r1 = train(c1, disc, s1);
  TrainResult r2 = train(c2, disc, s2);
  return DecomposedModel{std::move(r1), std::move(r2)};
}

std::vector<FeFunction> reference_solutions(const DatasetHeader& header, std::span<const ProblemSample> samples,
                                            int ref_n) {
  if (ref_n == 0) ref_n = reference_size(static_cast<int>(header.n));
  DatasetHeader fine = header;
  fine.n = static_cast<std::uint32_t>(ref_n);
  const DatasetGeometry geo = geometry_of(fine);
  auto mesh = std::make_shared<const Mesh>(build_mesh(geo.domain, geo.masks, ElementKind::rectangular));
  std::vector<FeFunction> refs;
  refs.reserve(samples.size());
  if (header.kind == DatasetKind::helmholtz) {
    for (const auto& s : samples) refs.push_back(fine_function(mesh, helmholtz_solution(s, geo.domain)));
    return refs;
  }
  auto op = std::make_shared<const FemOperator>(make_fem_operator(mesh));
  for (const auto& s : samples) refs.push_back(solve_fem(assemble_system(op, resample(s, geo.domain, geo.masks))));
  return refs;
}

EvalResult evaluate(const Predictor& model, const Discretization& disc, std::size_t count,
                    std::span<const FeFunction> references) {
  if (references.size() < count) throw UsageError("fewer references than samples");
  EvalResult res;
  res.per_sample.reserve(count);
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    res.per_sample.push_back(norm_report(disc.as_function(model(k)), references[k], disc.masks()));
    sum += res.per_sample.back().relative_h1;
  }
  res.mean_rel_h1 = count ? sum / static_cast<double>(count) : 0.0;
  return res;
}

}  // namespace nicon
