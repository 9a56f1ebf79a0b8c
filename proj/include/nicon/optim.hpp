#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nicon/unet.hpp"

namespace nicon {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update with learning rate lr. Throws
// NumericalError for non-finite gradients, UsageError on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

// base_lr * 0.5 * (1 + cos(pi step / T)); steps past T return 0.
double cosine_lr(std::uint64_t step, std::uint64_t total, double base_lr);

// "NICN" | u16 version | u16 content (2 = checkpoint) | config | u64 count | f64[count]
void save_checkpoint(const std::string& path, const UNet& net);
UNet load_checkpoint(const std::string& path);

}  // namespace nicon
