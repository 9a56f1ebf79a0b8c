// nicon: dataset generation, training, evaluation, studies and plot data.
//
//   nicon generate --n 16 --kind poisson --count 64 --seed 7 --out data
//   nicon train    --data data/dataset.bin --method fe_rect --epochs 2000 --out run
//   nicon evaluate --data test.bin --method fe_rect --checkpoint run/model.ckpt --out eval
//   nicon study    --study memory_table --out study
//   nicon plotdata --metrics study/metrics.csv --out plots
//
// Every option may also come from a JSON object given by --config (keys are
// the long option names); command-line flags win. NICON_OUT_DIR replaces the
// default output directory.
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 numerical.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nicon/binary_io.hpp"
#include "nicon/error.hpp"
#include "nicon/optim.hpp"
#include "nicon/studies.hpp"
#include "nicon/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace nicon;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options {
  int n = 16;
  bool n_given = false;
  std::string kind = "poisson";
  std::string method = "fe_rect";
  std::string formulation = "original";
  int count = 64;
  std::uint64_t seed = 0;
  int epochs = 10000;
  int batch = 32;
  double lr = 1e-4;
  double kappa = 1.0;
  int c0 = 0;
  int levels = 0;
  int sub_factor = 3;
  int log_every = 0;
  int ref_n = 0;
  bool no_eval = false;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::string checkpoint2;
  std::string baseline;
  std::string split = "test";
  std::string study;
  std::string model;  // empty: study default
  std::string metrics;
  std::vector<int> ns;
  std::vector<std::string> methods;
  std::vector<int> counts;
  int train_count = 64;
  int test_count = 64;
  double rho = 1e-3;
};

std::string out_dir(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("NICON_OUT_DIR"); env && *env) return env;
  return "out";
}

json artifact(const fs::path& p) { return json{{"path", p.string()}, {"fnv1a", hex64(hash_file(p.string()))}}; }

void write_manifest(const fs::path& dir, const std::string& command, const json& config, std::uint64_t seed,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  json m;
  m["command"] = command;
  m["tool_version"] = kVersion;
  m["seed"] = seed;
  m["config"] = config;
  m["inputs"] = json::array();
  for (const auto& p : inputs) m["inputs"].push_back(artifact(p));
  m["artifacts"] = json::array();
  for (const auto& p : outputs) m["artifacts"].push_back(artifact(p));
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

json train_json(const Options& o) {
  return json{{"n", o.n},           {"method", o.method},   {"formulation", o.formulation},
              {"epochs", o.epochs}, {"batch", o.batch},     {"lr", o.lr},
              {"seed", o.seed},     {"c0", o.c0},           {"levels", o.levels},
              {"sub-factor", o.sub_factor}, {"data", o.data}};
}

TrainConfig train_config(const Options& o, Formulation f, int n) {
  TrainConfig c;
  c.method = parse_method(o.method);
  c.formulation = f;
  c.n = n;
  c.epochs = o.epochs;
  c.batch = o.batch;
  c.base_lr = o.lr;
  c.seed = o.seed;
  c.c0 = o.c0;
  c.levels = o.levels;
  c.log_every = o.log_every;
  c.validate();
  return c;
}

Dataset load_checked(const Options& o) {
  if (o.data.empty()) throw UsageError("--data is required");
  if (!fs::exists(o.data)) throw DataError("missing dataset " + o.data);
  return dataset_load(o.data);
}

ProblemKind problem_kind(const DatasetHeader& h) {
  return h.kind == DatasetKind::helmholtz ? ProblemKind::helmholtz : ProblemKind::poisson;
}

void write_history(const fs::path& p, const TrainHistory& h) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  out << "epoch,loss\n";
  char buf[40];
  for (std::size_t e = 0; e < h.loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", h.loss[e]);
    out << e << ',' << buf << '\n';
  }
}

int cmd_generate(const Options& o) {
  const DatasetKind kind = parse_dataset_kind(o.kind);
  if (o.count < 1) throw UsageError("--count must be positive");
  const Dataset ds = generate_dataset(kind, o.n, static_cast<std::uint64_t>(o.count), o.seed, o.kappa);
  const fs::path dir = out_dir(o);
  fs::create_directories(dir);
  const fs::path bin = dir / "dataset.bin", side = dir / "dataset.json";
  dataset_save(bin.string(), ds);
  write_sidecar(side.string(), ds);
  write_manifest(dir, "generate",
                 json{{"n", o.n}, {"kind", o.kind}, {"count", o.count}, {"seed", o.seed}, {"kappa", ds.header.kappa}},
                 o.seed, {}, {bin, side});
  std::cout << bin.string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  if (o.epochs < 1) throw UsageError("--epochs must be at least 1");
  const Dataset ds = load_checked(o);
  const int n = static_cast<int>(ds.header.n);
  if (o.n_given && o.n != n) throw UsageError("--n does not match the dataset N");
  const Method m = parse_method(o.method);
  const Discretization disc(m, geometry_of(ds.header), problem_kind(ds.header), ds.header.kappa);
  const fs::path dir = out_dir(o);
  fs::create_directories(dir);
  std::vector<fs::path> outputs;
  StudyTables tables;
  const bool decomposed = o.formulation == "decomposed";
  std::vector<FeFunction> refs;
  if (!o.no_eval) refs = reference_solutions(ds.header, ds.samples, o.ref_n);
  const std::string id = "train/" + o.method + "/" + o.formulation;

  if (decomposed) {
    TrainConfig c1 = train_config(o, Formulation::subproblem1, n), c2 = train_config(o, Formulation::subproblem2, n);
    c1.epochs *= o.sub_factor;
    c2.epochs *= o.sub_factor;
    DecomposedModel dm = train_decomposed(c1, c2, disc, ds.samples);
    save_checkpoint((dir / "sub1.ckpt").string(), dm.sub1.model);
    save_checkpoint((dir / "sub2.ckpt").string(), dm.sub2.model);
    write_history(dir / "history_sub1.csv", dm.sub1.history);
    write_history(dir / "history_sub2.csv", dm.sub2.history);
    outputs = {dir / "sub1.ckpt", dir / "sub2.ckpt", dir / "history_sub1.csv", dir / "history_sub2.csv"};
    if (!o.no_eval) {
      const PreparedSet s1 = disc.prepare(ds.samples, Formulation::subproblem1);
      const PreparedSet s2 = disc.prepare(ds.samples, Formulation::subproblem2);
      const double e = evaluate(compose(network_predictor(dm.sub1.model, disc, s1),
                                        network_predictor(dm.sub2.model, disc, s2)),
                                disc, s1.size(), refs)
                           .mean_rel_h1;
      tables.metrics.push_back({id, n, o.method, o.formulation, "train", e,
                                dm.sub1.history.best_loss + dm.sub2.history.best_loss,
                                std::max(dm.sub1.history.best_epoch, dm.sub2.history.best_epoch), true});
    }
  } else {
    const Formulation f = parse_formulation(o.formulation);
    const PreparedSet set = disc.prepare(ds.samples, f);
    TrainResult r = train(train_config(o, f, n), disc, set);
    save_checkpoint((dir / "model.ckpt").string(), r.model);
    write_history(dir / "history.csv", r.history);
    outputs = {dir / "model.ckpt", dir / "history.csv"};
    if (!o.no_eval && f == Formulation::original) {
      const double e = evaluate(network_predictor(r.model, disc, set), disc, set.size(), refs).mean_rel_h1;
      tables.metrics.push_back(
          {id, n, o.method, o.formulation, "train", e, r.history.best_loss, r.history.best_epoch, true});
    }
  }
  if (!tables.metrics.empty()) {
    write_tables(dir.string(), tables);
    outputs.push_back(dir / "metrics.csv");
  }
  write_manifest(dir, "train", train_json(o), o.seed, {o.data}, outputs);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Dataset ds = load_checked(o);
  const int n = static_cast<int>(ds.header.n);
  const Method m = parse_method(o.method);
  const Discretization disc(m, geometry_of(ds.header), problem_kind(ds.header), ds.header.kappa);
  const PreparedSet full = disc.prepare(ds.samples, Formulation::original);
  const PreparedSet s1 = disc.prepare(ds.samples, Formulation::subproblem1);
  const PreparedSet s2 = disc.prepare(ds.samples, Formulation::subproblem2);
  std::vector<fs::path> inputs = {o.data};

  std::optional<UNet> net1, net2;
  Predictor model;
  std::string label = o.formulation;
  if (o.baseline == "zero") {
    model = zero_predictor(disc, full);
    label = "zero";
  } else if (o.baseline == "classical") {
    model = o.formulation == "decomposed" ? compose(classical_predictor(disc, s1), classical_predictor(disc, s2))
                                          : classical_predictor(disc, full);
    label = "classical";
  } else if (!o.baseline.empty()) {
    throw UsageError("unknown baseline '" + o.baseline + "'");
  } else if (o.formulation == "decomposed") {
    if (o.checkpoint.empty() || o.checkpoint2.empty())
      throw UsageError("decomposed evaluation needs --checkpoint and --checkpoint2");
    net1.emplace(load_checkpoint(o.checkpoint));
    net2.emplace(load_checkpoint(o.checkpoint2));
    inputs.push_back(o.checkpoint);
    inputs.push_back(o.checkpoint2);
    model = compose(network_predictor(*net1, disc, s1), network_predictor(*net2, disc, s2));
  } else if (o.formulation == "original") {
    if (o.checkpoint.empty()) throw UsageError("--checkpoint or --baseline is required");
    net1.emplace(load_checkpoint(o.checkpoint));
    inputs.push_back(o.checkpoint);
    model = network_predictor(*net1, disc, full);
  } else {
    throw UsageError("--formulation must be original or decomposed");
  }
  for (const UNet* net : {net1 ? &*net1 : nullptr, net2 ? &*net2 : nullptr})
    if (net && net->config().n != n) throw UsageError("checkpoint N does not match the dataset N");

  const auto refs = reference_solutions(ds.header, ds.samples, o.ref_n);
  const EvalResult ev = evaluate(model, disc, full.size(), refs);
  double loss = 0.0;
  for (std::size_t k = 0; k < full.size(); ++k) loss += disc.sample_loss(full, k, model(k));
  loss /= static_cast<double>(full.size());

  const fs::path dir = out_dir(o);
  fs::create_directories(dir);
  StudyTables t;
  t.metrics.push_back({"evaluate/" + o.method + "/" + label, n, o.method, label, o.split, ev.mean_rel_h1, loss, 0, true});
  write_tables(dir.string(), t);
  {
    std::ofstream out(dir / "samples.csv");
    if (!out) throw DataError("cannot write samples.csv");
    out << "sample,l2_discrete,h1_seminorm_discrete,l2,h1_seminorm,h1,rel_h1\n";
    char buf[256];
    for (std::size_t k = 0; k < ev.per_sample.size(); ++k) {
      const NormReport& r = ev.per_sample[k];
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k, r.l2_discrete,
                    r.h1_seminorm_discrete, r.l2_continuous, r.h1_seminorm_continuous, r.h1_full, r.relative_h1);
      out << buf;
    }
  }
  write_manifest(dir, "evaluate",
                 json{{"method", o.method}, {"formulation", o.formulation}, {"baseline", o.baseline},
                      {"split", o.split}, {"ref-n", o.ref_n}, {"data", o.data}},
                 ds.header.seed, inputs, {dir / "metrics.csv", dir / "samples.csv"});
  std::cout << "mean_rel_h1 " << ev.mean_rel_h1 << '\n';
  return 0;
}

int cmd_study(const Options& o) {
  if (o.study.empty()) throw UsageError("--study is required");
  StudyConfig c;
  c.seed = o.seed;
  c.ns = o.ns;
  for (const auto& m : o.methods) c.methods.push_back(parse_method(m));
  if (o.model.empty()) c.model = o.study == "loss_scaling" ? ModelKind::nodal : ModelKind::unet;
  else if (o.model == "unet") c.model = ModelKind::unet;
  else if (o.model == "classical") c.model = ModelKind::classical;
  else if (o.model == "nodal") c.model = ModelKind::nodal;
  else throw UsageError("--model must be unet, classical or nodal");
  c.epochs = o.epochs;
  c.batch = o.batch;
  c.base_lr = o.lr;
  c.c0 = o.c0;
  c.levels = o.levels;
  c.train_count = o.train_count;
  c.test_count = o.test_count;
  c.counts = o.counts;
  c.subproblem_epoch_factor = o.sub_factor;
  c.kappa = o.kappa;
  c.rho = o.rho;
  c.log_every = o.log_every;
  if (c.epochs < 1) throw UsageError("--epochs must be at least 1");

  const StudyTables t = run_study(o.study, c);
  const fs::path dir = out_dir(o);
  write_tables(dir.string(), t);
  std::vector<fs::path> outputs;
  for (const char* f : {"metrics.csv", "rates.csv", "memory.csv"})
    if (fs::exists(dir / f)) outputs.push_back(dir / f);
  json cfg{{"study", o.study},         {"seed", o.seed},         {"ns", o.ns},
           {"methods", o.methods},     {"model", o.model},       {"epochs", o.epochs},
           {"batch", o.batch},         {"lr", o.lr},             {"c0", o.c0},
           {"levels", o.levels},       {"train-count", o.train_count}, {"test-count", o.test_count},
           {"counts", o.counts},       {"sub-factor", o.sub_factor},   {"kappa", o.kappa},
           {"rho", o.rho}};
  write_manifest(dir, "study", cfg, o.seed, {}, outputs);
  for (const auto& r : t.memory)
    std::cout << "N=" << r.n << " fem_inverse_mb=" << r.fem_inverse_mb << " model_param_mb=" << r.model_param_mb
              << '\n';
  for (const auto& r : t.rates) std::cout << r.study << ' ' << r.n_pair << " rate=" << r.fitted_rate << '\n';
  for (const auto& r : t.metrics)
    std::cout << r.run_id << " N=" << r.n << ' ' << r.split << " rel_h1=" << r.mean_rel_h1 << '\n';
  return 0;
}

int cmd_plotdata(const Options& o) {
  if (o.metrics.empty()) throw UsageError("--metrics is required");
  const fs::path dir = out_dir(o);
  const auto paths = write_plot_series(o.metrics, dir.string());
  std::vector<fs::path> outputs(paths.begin(), paths.end());
  write_manifest(dir, "plotdata", json{{"metrics", o.metrics}}, 0, {o.metrics}, outputs);
  for (const auto& p : paths) std::cout << p << '\n';
  return 0;
}

// Turns the JSON object of --config into "--key value" arguments for every
// key not given on the command line; they go right after the subcommand.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw DataError("config " + path + " must be a JSON object");
  auto given = [&](const std::string& key) {
    for (const auto& a : args)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config" || given(key)) continue;
    auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
      continue;
    }
    extra.push_back("--" + key);
    if (value.is_array()) {
      for (const auto& v : value) extra.push_back(scalar(v));
    } else {
      extra.push_back(scalar(value));
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"NICON lab: residual-loss operator learning with classical oracles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string config;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", config, "JSON file with option values");
    s->add_option("--out", o.out, "output directory");
    s->add_option("--seed", o.seed, "random seed");
  };
  auto training = [&](CLI::App* s) {
    s->add_option("--epochs", o.epochs, "training epochs");
    s->add_option("--batch", o.batch, "batch size");
    s->add_option("--lr", o.lr, "base learning rate");
    s->add_option("--c0", o.c0, "first-level channels (0 = resolution rule)");
    s->add_option("--levels", o.levels, "U-Net levels (0 = resolution rule)");
    s->add_option("--sub-factor", o.sub_factor, "epoch multiplier of subproblem models");
    s->add_option("--log-every", o.log_every, "print the loss every k epochs");
    s->add_option("--method", o.method, "fd5 | fd9 | fe_tri | fe_rect");
  };

  auto* gen = app.add_subcommand("generate", "write a seeded dataset");
  common(gen);
  gen->add_option("--n", o.n, "grid nodes per side");
  gen->add_option("--kind", o.kind, "poisson | helmholtz | poisson_hole");
  gen->add_option("--count", o.count, "number of samples");
  gen->add_option("--kappa", o.kappa, "Helmholtz wave number");

  auto* tr = app.add_subcommand("train", "train a U-Net on a dataset");
  common(tr);
  training(tr);
  tr->add_option("--n", o.n, "grid nodes per side (must match the dataset)");
  tr->add_option("--data", o.data, "dataset file");
  tr->add_option("--formulation", o.formulation, "original | decomposed | subproblem1 | subproblem2");
  tr->add_option("--ref-n", o.ref_n, "reference grid size (0 = default)");
  tr->add_flag("--no-eval", o.no_eval, "skip the training-set error");

  auto* ev = app.add_subcommand("evaluate", "relative H1 error against fine reference solutions");
  common(ev);
  ev->add_option("--data", o.data, "dataset file");
  ev->add_option("--method", o.method, "fd5 | fd9 | fe_tri | fe_rect");
  ev->add_option("--formulation", o.formulation, "original | decomposed");
  ev->add_option("--checkpoint", o.checkpoint, "model (or subproblem-1 model)");
  ev->add_option("--checkpoint2", o.checkpoint2, "subproblem-2 model");
  ev->add_option("--baseline", o.baseline, "zero | classical instead of a checkpoint");
  ev->add_option("--split", o.split, "split label written to metrics.csv");
  ev->add_option("--ref-n", o.ref_n, "reference grid size (0 = default)");

  auto* st = app.add_subcommand("study", "run an experiment");
  common(st);
  training(st);
  st->add_option("--study", o.study,
                 "convergence | loss_scaling | generalization | decomposition | complex_geometry | helmholtz | "
                 "memory_table");
  st->add_option("--ns", o.ns, "grid sizes");
  st->add_option("--methods", o.methods, "methods");
  st->add_option("--model", o.model, "unet | classical | nodal (default: nodal for loss_scaling, else unet)");
  st->add_option("--train-count", o.train_count, "training samples");
  st->add_option("--test-count", o.test_count, "test samples");
  st->add_option("--counts", o.counts, "training-set sizes (generalization)");
  st->add_option("--kappa", o.kappa, "Helmholtz wave number");
  st->add_option("--rho", o.rho, "loss_scaling: L_c / L(0)");

  auto* pl = app.add_subcommand("plotdata", "series files from a metrics table");
  common(pl);
  pl->add_option("--metrics", o.metrics, "metrics.csv");

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args);
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? 0 : 2;
    }
    if (gen->parsed()) return cmd_generate(o);
    if (tr->parsed()) {
      o.n_given = tr->get_option("--n")->count() > 0;
      return cmd_train(o);
    }
    if (ev->parsed()) return cmd_evaluate(o);
    if (st->parsed()) return cmd_study(o);
    if (pl->parsed()) return cmd_plotdata(o);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
