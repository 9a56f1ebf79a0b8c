#pragma once

// Training loops (U-Net and direct nodal parameters), the loss-scaling
// stopping schedule, decomposed prediction and evaluation.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nicon/discretization.hpp"
#include "nicon/metrics.hpp"
#include "nicon/unet.hpp"

namespace nicon {

struct TrainConfig {
  Method method = Method::fe_rect;
  Formulation formulation = Formulation::original;
  int n = 16;
  int epochs = 10000;
  int batch = 32;
  double base_lr = 1e-4;
  std::uint64_t seed = 0;
  LossWeights weights;
  // 0 selects the resolution rule; any override marks the model "desk".
  int c0 = 0;
  int levels = 0;
  int log_every = 0;  // 0 = silent

  UNetConfig network(int in_channels) const;
  void validate() const;
};

struct TrainHistory {
  // loss[e] is the full training loss of the parameters at the start of
  // epoch e; the last entry is measured after the final epoch.
  std::vector<double> loss;
  double best_loss = 0.0;
  int best_epoch = 0;
};

struct TrainResult {
  UNet model;
  TrainHistory history;
};

// Adam with cosine decay over epochs * batches-per-epoch steps. Batches are
// a per-epoch shuffle seeded by (seed, epoch). Returns the minimum-loss
// parameters. Throws NumericalError on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const Discretization& disc, const PreparedSet& data);

struct TargetOutcome {
  bool attained = false;
  int epochs = 0;
  double best_loss = 0.0;
  double target = 0.0;
  std::vector<Field> predictions;  // post-processed, one per sample (nodal optimizer)
  std::optional<TrainResult> network;
};

enum class Optimizer { unet, nodal };

// Runs until the best loss reaches `target` or max_epochs is exhausted. The
// nodal optimizer treats the nodal values themselves as the parameters and
// iterates CGLS on the (linear least-squares) residual loss; one epoch is one
// CGLS step on every sample.
TargetOutcome train_to_target(const TrainConfig& cfg, const Discretization& disc, const PreparedSet& data,
                              double target, int max_epochs, Optimizer opt = Optimizer::nodal);

// Per-level targets L_c / factor^m.
struct ScalingSchedule {
  double factor = 16.0;
  double base_loss = 0.0;
  double target(int level) const;
  static double method_factor(Method m);  // 64 for FD, 16 for FE
};

// A predictor maps sample k of a prepared set to a post-processed nodal field.
using Predictor = std::function<Field(std::size_t k)>;

Predictor network_predictor(UNet& net, const Discretization& disc, const PreparedSet& set);
Predictor zero_predictor(const Discretization& disc, const PreparedSet& set);
Predictor classical_predictor(const Discretization& disc, const PreparedSet& set);
// u_s = u_1 + u_2, each already post-processed by its own subproblem.
Predictor compose(Predictor p1, Predictor p2);

struct DecomposedModel {
  TrainResult sub1;
  TrainResult sub2;
};

// Trains the two subproblem models with matched architecture. Throws
// UsageError when the two configs disagree on N or method.
DecomposedModel train_decomposed(const TrainConfig& cfg1, const TrainConfig& cfg2, const Discretization& disc,
                                 std::span<const ProblemSample> samples);

// Fine-grid reference solutions: Q1 FEM at reference_size(N) for Poisson,
// analytic sampling for Helmholtz.
std::vector<FeFunction> reference_solutions(const DatasetHeader& header, std::span<const ProblemSample> samples,
                                            int ref_n = 0);

struct EvalResult {
  std::vector<NormReport> per_sample;
  double mean_rel_h1 = 0.0;
};

EvalResult evaluate(const Predictor& model, const Discretization& disc, std::size_t count,
                    std::span<const FeFunction> references);

}  // namespace nicon
