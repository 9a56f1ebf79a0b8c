#pragma once

// Experiment runners. Every runner is a pure function of its config and
// returns plain tables; write_tables() emits metrics.csv, rates.csv and
// memory.csv.

#include <cstdint>
#include <string>
#include <vector>

#include "nicon/train.hpp"

namespace nicon {

struct MetricsRow {
  std::string run_id;  // study/method/formulation[/tag], independent of N
  int n = 0;
  std::string method;
  std::string formulation;
  std::string split;  // train | test
  double mean_rel_h1 = 0.0;
  double best_loss = 0.0;
  int epoch_best = 0;
  bool attained = true;  // loss_scaling only, not written to CSV
};

struct RateRow {
  std::string study;  // study/method[/tag]
  std::string n_pair;  // "17-33", or "17-65" for the fit over all levels
  double fitted_rate = 0.0;
};

struct MemoryRow {
  int n = 0;
  double fem_inverse_mb = 0.0;   // (N^2)^2 scalars at 4 bytes
  double model_param_mb = 0.0;   // resolution-rule U-Net at 4 bytes
  bool inverted = false;         // dense inverse actually formed
  double inverse_residual = 0.0;  // max |A A^-1 - I| when inverted
};

struct StudyTables {
  std::vector<MetricsRow> metrics;
  std::vector<RateRow> rates;
  std::vector<MemoryRow> memory;
};

enum class ModelKind { unet, classical, nodal };

struct StudyConfig {
  std::uint64_t seed = 0;
  std::vector<int> ns;             // empty = study default
  std::vector<Method> methods;     // empty = study default
  ModelKind model = ModelKind::unet;
  int epochs = 1000;
  int batch = 32;
  double base_lr = 1e-3;
  int c0 = 0;
  int levels = 0;
  int train_count = 64;
  int test_count = 64;
  std::vector<int> counts;  // generalization: training-set sizes
  int subproblem_epoch_factor = 3;
  double kappa = 1.0;
  // loss_scaling: L_c = rho * L(0) on the coarsest grid.
  double rho = 1e-3;
  int max_nodal_epochs = 200000;
  int invert_up_to = 32;  // memory_table
  int log_every = 0;
};

// Least-squares slope of log(err) against log(h).
double fitted_rate(std::span<const double> h, std::span<const double> err);

// Pairwise and overall rates of one curve (errors ordered by ascending N).
std::vector<RateRow> rate_rows(const std::string& study, std::span<const int> ns, std::span<const double> err);

StudyTables run_memory_table(const StudyConfig& cfg);
StudyTables run_convergence(const StudyConfig& cfg);
StudyTables run_loss_scaling(const StudyConfig& cfg);
StudyTables run_generalization(const StudyConfig& cfg);
StudyTables run_decomposition(const StudyConfig& cfg);
StudyTables run_complex_geometry(const StudyConfig& cfg);
StudyTables run_helmholtz(const StudyConfig& cfg);

// Dispatch on {convergence, loss_scaling, generalization, decomposition,
// complex_geometry, helmholtz, memory_table}; UsageError otherwise.
StudyTables run_study(const std::string& tag, const StudyConfig& cfg);

// gamma values swept for a method: {1, 2, opt - 2, opt, opt + 1}, with opt
// 4 (FE) or 6 (FD), duplicates removed.
std::vector<int> gamma_sweep(Method m);

// Joint pool of the decomposition study: n_marg (f, g_N) draws times n_marg
// g_D draws, split into two disjoint halves.
struct DecompositionPool {
  std::vector<SinusoidParams> source;     // f
  std::vector<SinusoidParams> neumann;    // g_N, paired with source
  std::vector<SinusoidParams> dirichlet;  // g_D
  std::vector<std::pair<int, int>> train;  // (source index, dirichlet index)
  std::vector<std::pair<int, int>> test;
};
DecompositionPool decomposition_pool(std::uint64_t seed, int n_marginal = 100);

// Writes the non-empty tables as CSV into dir (created if missing). Values
// are printed with round-trip precision so reruns are byte-identical.
void write_tables(const std::string& dir, const StudyTables& tables);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// One series file per (run_id, split) curve: "N mean_rel_h1" lines with
// strictly increasing N. Returns the paths written. DataError when the input
// has no rows or a curve repeats an N.
std::vector<std::string> write_plot_series(const std::string& metrics_csv, const std::string& out_dir);

}  // namespace nicon
