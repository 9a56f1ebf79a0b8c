#pragma once

// Resolution-scaled U-Net with hand-written reverse mode. All parameters live
// in one flat vector; ParamBlock describes each weight/bias slice.

#include <cstdint>
#include <string>
#include <vector>

#include "nicon/tensor.hpp"

namespace nicon {

struct UNetConfig {
  int n = 16;
  int in_channels = 1;
  int c0 = 8;
  int levels = 2;
  bool desk = false;  // true when c0 / levels deviate from the resolution rule

  // C0 = N/2 and L = log2(N) - 2, for N in {16, 32, 64, 128}.
  static UNetConfig resolution_rule(int n, int in_channels);
  // Throws UsageError for an invalid configuration.
  void validate() const;
  int channels(int level) const { return c0 << level; }
};

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Closed-form scalar count of all weights and biases.
std::size_t param_count(const UNetConfig& cfg);

class UNet {
 public:
  // Deterministic He-uniform weights from splitmix64(seed), zero biases.
  UNet(const UNetConfig& cfg, std::uint64_t seed);
  // Wraps existing parameters (checkpoint loading). Throws DataError on a size mismatch.
  UNet(const UNetConfig& cfg, std::vector<double> params);

  const UNetConfig& config() const { return cfg_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  std::size_t param_count() const { return params_.size(); }

  // (B, in, N, N) -> (B, 1, N, N); caches the intermediates for backward.
  Tensor forward(const Tensor& x);
  // Gradient of <upstream, forward(x)> for the last forward input; grad is
  // overwritten (resized to param_count()).
  void backward(const Tensor& upstream, std::vector<double>& grad);

 private:
  struct Conv {
    std::size_t w = 0, b = 0;
    int cin = 0, cout = 0, k = 0;
  };
  struct Level {
    Conv c1, c2;
    Tensor in, a1, a2, pooled;
    std::vector<std::size_t> argmax;
  };
  struct Up {
    Conv up, c1, c2;
    Tensor in, upsampled, cat, a1, a2;
  };

  void layout();
  Conv add_conv(const std::string& name, int cin, int cout, int k, bool transposed);
  void init(std::uint64_t seed);

  UNetConfig cfg_;
  std::vector<double> params_;
  std::vector<ParamBlock> blocks_;
  std::vector<Conv> convs_;
  std::vector<bool> transposed_;
  std::vector<Level> enc_;
  Level mid_;
  std::vector<Up> dec_;
  Conv head_;
  Tensor head_in_;
  Workspace ws_;
  bool have_forward_ = false;
};

}  // namespace nicon
