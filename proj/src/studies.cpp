#include "nicon/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nicon/error.hpp"
#include "nicon/rng.hpp"

namespace nicon {

double fitted_rate(std::span<const double> h, std::span<const double> err) {
  if (h.size() != err.size() || h.size() < 2) throw UsageError("rate fit needs at least two levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) throw DataError("rate fit needs positive h and errors");
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::vector<RateRow> rate_rows(const std::string& study, std::span<const int> ns, std::span<const double> err) {
  std::vector<RateRow> rows;
  std::vector<double> h;
  for (int n : ns) h.push_back(1.0 / (n - 1));
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    const double hh[2] = {h[i], h[i + 1]}, ee[2] = {err[i], err[i + 1]};
    rows.push_back({study, std::to_string(ns[i]) + "-" + std::to_string(ns[i + 1]), fitted_rate(hh, ee)});
  }
  if (ns.size() > 2) rows.push_back({study, std::to_string(ns.front()) + "-" + std::to_string(ns.back()), fitted_rate(h, err)});
  return rows;
}

namespace {

double mib(double bytes) { return bytes / (1024.0 * 1024.0); }

TrainConfig train_config(const StudyConfig& sc, Method m, Formulation f, int n) {
  TrainConfig tc;
  tc.method = m;
  tc.formulation = f;
  tc.n = n;
  tc.epochs = sc.epochs;
  tc.batch = sc.batch;
  tc.base_lr = sc.base_lr;
  tc.seed = sc.seed;
  tc.c0 = sc.c0;
  tc.levels = sc.levels;
  tc.log_every = sc.log_every;
  return tc;
}

struct Split {
  Dataset data;
  std::vector<FeFunction> refs;
};

Split make_split(DatasetKind kind, int n, int count, std::uint64_t seed, double kappa) {
  Split s;
  s.data = generate_dataset(kind, n, static_cast<std::uint64_t>(count), seed, kappa);
  s.refs = reference_solutions(s.data.header, s.data.samples);
  return s;
}

std::uint64_t test_seed(std::uint64_t seed) { return seed ^ 0x5DEECE66DULL; }

MetricsRow row(const std::string& id, int n, Method m, Formulation f, const std::string& split, double err,
               double best_loss, int epoch_best) {
  return MetricsRow{id, n, to_string(m), to_string(f), split, err, best_loss, epoch_best, true};
}

// Trains (or substitutes) one model of the original formulation on `train`
// and reports the train/test errors of its post-processed predictions.
void original_cell(const StudyConfig& sc, const std::string& id, Method m, ProblemKind pk, const Split& train,
                   const Split& test, std::vector<MetricsRow>& out, double* test_err) {
  const int n = static_cast<int>(train.data.header.n);
  const Discretization disc(m, geometry_of(train.data.header), pk, train.data.header.kappa);
  const PreparedSet tr = disc.prepare(train.data.samples, Formulation::original);
  const PreparedSet te = disc.prepare(test.data.samples, Formulation::original);
  if (sc.model == ModelKind::nodal) throw UsageError("the nodal optimizer is only available in loss_scaling");
  if (sc.model == ModelKind::classical) {
    const double e = evaluate(classical_predictor(disc, te), disc, te.size(), test.refs).mean_rel_h1;
    out.push_back(row(id, n, m, Formulation::original, "test", e, 0.0, 0));
    if (test_err) *test_err = e;
    return;
  }
  TrainResult r = nicon::train(train_config(sc, m, Formulation::original, n), disc, tr);
  const double etr = evaluate(network_predictor(r.model, disc, tr), disc, tr.size(), train.refs).mean_rel_h1;
  const double ete = evaluate(network_predictor(r.model, disc, te), disc, te.size(), test.refs).mean_rel_h1;
  out.push_back(row(id, n, m, Formulation::original, "train", etr, r.history.best_loss, r.history.best_epoch));
  out.push_back(row(id, n, m, Formulation::original, "test", ete, r.history.best_loss, r.history.best_epoch));
  if (test_err) *test_err = ete;
}

std::vector<Method> or_default(const std::vector<Method>& v, std::vector<Method> d) { return v.empty() ? d : v; }
std::vector<int> or_default(const std::vector<int>& v, std::vector<int> d) { return v.empty() ? d : v; }

}  // namespace

StudyTables run_memory_table(const StudyConfig& cfg) {
  StudyTables t;
  for (int n : or_default(cfg.ns, {16, 32, 64, 128})) {
    MemoryRow r;
    r.n = n;
    const double dofs = static_cast<double>(n) * n;
    r.fem_inverse_mb = mib(dofs * dofs * 4.0);
    r.model_param_mb = mib(static_cast<double>(param_count(UNetConfig::resolution_rule(n, 1))) * 4.0);
    if (n <= cfg.invert_up_to) {
      const DomainMask dm = make_grid(n, DomainShape::unit_square);
      const BoundaryMasks bm = classify_masks(dm, BcLayout::left_neumann);
      auto mesh = std::make_shared<const Mesh>(build_mesh(dm, bm, ElementKind::rectangular));
      const FemOperator op = make_fem_operator(mesh);
      const DenseMatrix a = DenseMatrix::from_csr(op.system);
      const DenseMatrix prod = a * dense_invert(a);
      double res = 0.0;
      for (int i = 0; i < prod.rows(); ++i)
        for (int j = 0; j < prod.cols(); ++j) res = std::max(res, std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)));
      r.inverted = true;
      r.inverse_residual = res;
    }
    t.memory.push_back(r);
  }
  return t;
}

StudyTables run_convergence(const StudyConfig& cfg) {
  StudyTables t;
  const std::vector<int> ns =
      or_default(cfg.ns, cfg.model == ModelKind::classical ? std::vector<int>{16, 32, 64} : std::vector<int>{16, 32});
  const auto methods = or_default(cfg.methods, {Method::fd5, Method::fd9, Method::fe_tri, Method::fe_rect});
  std::map<int, std::pair<Split, Split>> splits;
  for (int n : ns)
    splits.emplace(n, std::make_pair(make_split(DatasetKind::poisson, n, cfg.train_count, cfg.seed, 0.0),
                                     make_split(DatasetKind::poisson, n, cfg.test_count, test_seed(cfg.seed), 0.0)));
  for (Method m : methods) {
    const std::string id = "convergence/" + to_string(m) + "/original";
    std::vector<double> errs;
    for (int n : ns) {
      double e = 0.0;
      original_cell(cfg, id, m, ProblemKind::poisson, splits.at(n).first, splits.at(n).second, t.metrics, &e);
      errs.push_back(e);
    }
    if (ns.size() > 1) {
      auto r = rate_rows("convergence/" + to_string(m), ns, errs);
      t.rates.insert(t.rates.end(), r.begin(), r.end());
    }
  }
  return t;
}

std::vector<int> gamma_sweep(Method m) {
  const int opt = is_fd(m) ? 6 : 4;
  std::set<int> g = {1, 2, opt - 2, opt, opt + 1};
  return {g.begin(), g.end()};
}

StudyTables run_loss_scaling(const StudyConfig& cfg) {
  StudyTables t;
  const std::vector<int> ns = or_default(cfg.ns, {9, 17, 33});
  const auto methods = or_default(cfg.methods, {Method::fe_rect, Method::fd5});
  std::vector<Split> splits;
  for (int n : ns) splits.push_back(make_split(DatasetKind::poisson, n, cfg.train_count, cfg.seed, 0.0));
  if (cfg.model == ModelKind::classical) throw UsageError("loss_scaling needs a trainable model (nodal or unet)");
  for (Method m : methods) {
    std::vector<Discretization> discs;
    std::vector<PreparedSet> sets;
    for (const auto& s : splits) {
      discs.emplace_back(m, geometry_of(s.data.header));
      sets.push_back(discs.back().prepare(s.data.samples, Formulation::original));
    }
    TrainConfig tc = train_config(cfg, m, Formulation::original, ns.front());
    // L(0): the loss of the zero field on the coarsest grid.
    const double l0 = train_to_target(tc, discs.front(), sets.front(), INFINITY, 1).best_loss;
    for (int gamma : gamma_sweep(m)) {
      const ScalingSchedule sched{std::pow(2.0, gamma), cfg.rho * l0};
      const std::string id = "loss_scaling/" + to_string(m) + "/gamma" + std::to_string(gamma);
      std::vector<double> errs;
      for (std::size_t lv = 0; lv < ns.size(); ++lv) {
        tc.n = ns[lv];
        const bool net = cfg.model == ModelKind::unet;
        TargetOutcome o = train_to_target(tc, discs[lv], sets[lv], sched.target(static_cast<int>(lv)),
                                          net ? cfg.epochs : cfg.max_nodal_epochs,
                                          net ? Optimizer::unet : Optimizer::nodal);
        const auto& preds = o.predictions;
        const EvalResult ev =
            net ? evaluate(network_predictor(o.network->model, discs[lv], sets[lv]), discs[lv], sets[lv].size(),
                           splits[lv].refs)
                : evaluate([&preds](std::size_t k) { return preds[k]; }, discs[lv], preds.size(), splits[lv].refs);
        MetricsRow r = row(id, ns[lv], m, Formulation::original, "train", ev.mean_rel_h1, o.best_loss, o.epochs);
        r.attained = o.attained;
        t.metrics.push_back(r);
        errs.push_back(ev.mean_rel_h1);
      }
      auto r = rate_rows(id, ns, errs);
      t.rates.insert(t.rates.end(), r.begin(), r.end());
    }
  }
  return t;
}

StudyTables run_generalization(const StudyConfig& cfg) {
  StudyTables t;
  const int n = or_default(cfg.ns, {16}).front();
  const auto methods = or_default(cfg.methods, {Method::fe_rect});
  const std::vector<int> counts = or_default(cfg.counts, {8, 32, 64});
  const int max_count = *std::max_element(counts.begin(), counts.end());
  const Split pool = make_split(DatasetKind::poisson, n, max_count, cfg.seed, 0.0);
  const Split test = make_split(DatasetKind::poisson, n, cfg.test_count, test_seed(cfg.seed), 0.0);
  for (Method m : methods) {
    for (int c : counts) {
      Split sub;
      sub.data.header = pool.data.header;
      sub.data.header.count = static_cast<std::uint64_t>(c);
      sub.data.samples.assign(pool.data.samples.begin(), pool.data.samples.begin() + c);
      sub.refs.assign(pool.refs.begin(), pool.refs.begin() + c);
      original_cell(cfg, "generalization/" + to_string(m) + "/original/count" + std::to_string(c), m,
                    ProblemKind::poisson, sub, test, t.metrics, nullptr);
    }
  }
  return t;
}

DecompositionPool decomposition_pool(std::uint64_t seed, int n_marginal) {
  if (n_marginal < 2) throw UsageError("decomposition pool needs at least two marginal draws");
  DecompositionPool p;
  SplitMix64 rng(seed);
  for (int i = 0; i < n_marginal; ++i) {
    p.source.push_back(sample_sinusoid(rng));
    p.neumann.push_back(sample_sinusoid(rng));
  }
  for (int i = 0; i < n_marginal; ++i) p.dirichlet.push_back(sample_sinusoid(rng));
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n_marginal; ++i)
    for (int j = 0; j < n_marginal; ++j) all.emplace_back(i, j);
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.next() % i]);
  const std::size_t half = all.size() / 2;
  p.train.assign(all.begin(), all.begin() + half);
  p.test.assign(all.begin() + half, all.end());
  return p;
}

StudyTables run_decomposition(const StudyConfig& cfg) {
  StudyTables t;
  const int n = or_default(cfg.ns, {16}).front();
  const auto methods = or_default(cfg.methods, {Method::fe_rect});
  const DecompositionPool pool = decomposition_pool(cfg.seed);
  DatasetHeader h;
  h.n = static_cast<std::uint32_t>(n);
  h.kind = DatasetKind::poisson;
  h.layout = layout_of(h.kind);
  h.shape = shape_of(h.kind);
  h.seed = cfg.seed;
  const DatasetGeometry geo = geometry_of(h);
  auto build = [&](const std::vector<std::pair<int, int>>& pairs, int count) {
    Split s;
    s.data.header = h;
    s.data.header.count = static_cast<std::uint64_t>(count);
    for (int k = 0; k < count; ++k) {
      ProblemSample ps;
      ps.params = {pool.source[pairs[k].first], pool.dirichlet[pairs[k].second], pool.neumann[pairs[k].first]};
      ps.index = static_cast<std::uint64_t>(k);
      s.data.samples.push_back(resample(ps, geo.domain, geo.masks));
    }
    s.refs = reference_solutions(h, s.data.samples);
    return s;
  };
  const Split train_set = build(pool.train, cfg.train_count);
  const Split test_set = build(pool.test, cfg.test_count);
  for (Method m : methods) {
    const std::string base = "decomposition/" + to_string(m);
    original_cell(cfg, base + "/original", m, ProblemKind::poisson, train_set, test_set, t.metrics, nullptr);
    const Discretization disc(m, geo);
    const PreparedSet tr1 = disc.prepare(train_set.data.samples, Formulation::subproblem1);
    const PreparedSet tr2 = disc.prepare(train_set.data.samples, Formulation::subproblem2);
    const PreparedSet te1 = disc.prepare(test_set.data.samples, Formulation::subproblem1);
    const PreparedSet te2 = disc.prepare(test_set.data.samples, Formulation::subproblem2);
    if (cfg.model == ModelKind::classical) {
      const double e = evaluate(compose(classical_predictor(disc, te1), classical_predictor(disc, te2)), disc,
                                te1.size(), test_set.refs)
                           .mean_rel_h1;
      t.metrics.push_back(row(base + "/decomposed", n, m, Formulation::original, "test", e, 0.0, 0));
      continue;
    }
    StudyConfig sub = cfg;
    sub.epochs = cfg.epochs * cfg.subproblem_epoch_factor;
    DecomposedModel dm = train_decomposed(train_config(sub, m, Formulation::subproblem1, n),
                                          train_config(sub, m, Formulation::subproblem2, n), disc,
                                          train_set.data.samples);
    const double etr = evaluate(compose(network_predictor(dm.sub1.model, disc, tr1),
                                        network_predictor(dm.sub2.model, disc, tr2)),
                                disc, tr1.size(), train_set.refs)
                           .mean_rel_h1;
    const double ete = evaluate(compose(network_predictor(dm.sub1.model, disc, te1),
                                        network_predictor(dm.sub2.model, disc, te2)),
                                disc, te1.size(), test_set.refs)
                           .mean_rel_h1;
    const double best = dm.sub1.history.best_loss + dm.sub2.history.best_loss;
    const int ep = std::max(dm.sub1.history.best_epoch, dm.sub2.history.best_epoch);
    t.metrics.push_back(row(base + "/decomposed", n, m, Formulation::original, "train", etr, best, ep));
    t.metrics.push_back(row(base + "/decomposed", n, m, Formulation::original, "test", ete, best, ep));
  }
  for (auto& r : t.metrics)
    if (r.run_id.ends_with("/decomposed")) r.formulation = "decomposed";
  return t;
}

StudyTables run_complex_geometry(const StudyConfig& cfg) {
  StudyTables t;
  const int n = or_default(cfg.ns, {16}).front();
  const auto methods = or_default(cfg.methods, {Method::fd5, Method::fe_rect});
  const Split train_set = make_split(DatasetKind::poisson_hole, n, cfg.train_count, cfg.seed, 0.0);
  const Split test_set = make_split(DatasetKind::poisson_hole, n, cfg.test_count, test_seed(cfg.seed), 0.0);
  for (Method m : methods)
    original_cell(cfg, "complex_geometry/" + to_string(m) + "/original", m, ProblemKind::poisson, train_set,
                  test_set, t.metrics, nullptr);
  return t;
}

StudyTables run_helmholtz(const StudyConfig& cfg) {
  StudyTables t;
  const std::vector<int> ns = or_default(cfg.ns, {16});
  const auto methods = or_default(cfg.methods, {Method::fe_rect});
  for (Method m : methods) {
    if (is_fd(m)) throw UsageError("the Helmholtz study supports FE methods only");
    const std::string id = "helmholtz/" + to_string(m) + "/original";
    std::vector<double> errs;
    for (int n : ns) {
      const Split tr = make_split(DatasetKind::helmholtz, n, cfg.train_count, cfg.seed, cfg.kappa);
      const Split te = make_split(DatasetKind::helmholtz, n, cfg.test_count, test_seed(cfg.seed), cfg.kappa);
      double e = 0.0;
      original_cell(cfg, id, m, ProblemKind::helmholtz, tr, te, t.metrics, &e);
      errs.push_back(e);
    }
    if (ns.size() > 1) {
      auto r = rate_rows("helmholtz/" + to_string(m), ns, errs);
      t.rates.insert(t.rates.end(), r.begin(), r.end());
    }
  }
  return t;
}

StudyTables run_study(const std::string& tag, const StudyConfig& cfg) {
  if (tag == "memory_table") return run_memory_table(cfg);
  if (tag == "convergence") return run_convergence(cfg);
  if (tag == "loss_scaling") return run_loss_scaling(cfg);
  if (tag == "generalization") return run_generalization(cfg);
  if (tag == "decomposition") return run_decomposition(cfg);
  if (tag == "complex_geometry") return run_complex_geometry(cfg);
  if (tag == "helmholtz") return run_helmholtz(cfg);
  throw UsageError("unknown study '" + tag + "'");
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, ',')) cells.push_back(c);
  return cells;
}

}  // namespace

void write_tables(const std::string& dir, const StudyTables& tables) {
  const std::filesystem::path d(dir);
  std::filesystem::create_directories(d);
  if (!tables.metrics.empty()) {
    auto out = open_out(d / "metrics.csv");
    out << "run_id,N,method,formulation,split,mean_rel_h1,best_loss,epoch_best\n";
    for (const auto& r : tables.metrics)
      out << r.run_id << ',' << r.n << ',' << r.method << ',' << r.formulation << ',' << r.split << ','
          << num(r.mean_rel_h1) << ',' << num(r.best_loss) << ',' << r.epoch_best << '\n';
  }
  if (!tables.rates.empty()) {
    auto out = open_out(d / "rates.csv");
    out << "study,N_pair,fitted_rate\n";
    for (const auto& r : tables.rates) out << r.study << ',' << r.n_pair << ',' << num(r.fitted_rate) << '\n';
  }
  if (!tables.memory.empty()) {
    auto out = open_out(d / "memory.csv");
    out << "N,fem_inverse_mb,model_param_mb\n";
    for (const auto& r : tables.memory) out << r.n << ',' << num(r.fem_inverse_mb) << ',' << num(r.model_param_mb) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("run_id,", 0) != 0) throw DataError(path + ": not a metrics table");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 8) throw DataError(path + ": malformed row '" + line + "'");
    try {
      rows.push_back({c[0], std::stoi(c[1]), c[2], c[3], c[4], std::stod(c[5]), std::stod(c[6]), std::stoi(c[7]), true});
    } catch (const std::logic_error&) {
      throw DataError(path + ": malformed row '" + line + "'");
    }
  }
  return rows;
}

std::vector<std::string> write_plot_series(const std::string& metrics_csv, const std::string& out_dir) {
  const auto rows = read_metrics_csv(metrics_csv);
  if (rows.empty()) throw DataError(metrics_csv + ": no rows");
  std::map<std::string, std::map<int, double>> curves;
  for (const auto& r : rows) {
    auto& c = curves[r.run_id + "/" + r.split];
    if (!c.emplace(r.n, r.mean_rel_h1).second)
      throw DataError("curve " + r.run_id + "/" + r.split + " repeats N = " + std::to_string(r.n));
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> paths;
  for (const auto& [key, pts] : curves) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '/', '_');
    const std::filesystem::path p = std::filesystem::path(out_dir) / (name + ".dat");
    auto out = open_out(p);
    out << "# " << key << "\n# N mean_rel_h1\n";
    for (const auto& [n, e] : pts) out << n << ' ' << num(e) << '\n';
    paths.push_back(p.string());
  }
  return paths;
}

}  // namespace nicon
