#pragma once

// NCHW binary64 tensors and the forward/backward kernels of the U-Net layers.
// Convolutions run as one GEMM over the whole batch (im2col, OpenBLAS).

#include <cstddef>
#include <span>
#include <vector>

namespace nicon {

struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, double value = 0.0)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, value) {}

  std::size_t size() const { return data.size(); }
  std::size_t offset(int b, int ch, int y, int x) const {
    return ((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x;
  }
  double& at(int b, int ch, int y, int x) { return data[offset(b, ch, y, x)]; }
  double at(int b, int ch, int y, int x) const { return data[offset(b, ch, y, x)]; }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  // Throws NumericalError when an entry is NaN or infinite.
  void check_finite(const char* where) const;
};

// Scratch buffers reused across layers.
struct Workspace {
  std::vector<double> col;
  std::vector<double> mat;
  std::vector<double> mat2;
};

// y = conv(x) + b, k in {1, 3}, stride 1, zero padding k / 2. Weights are
// [cout][cin][k][k].
void conv2d_forward(const Tensor& x, std::span<const double> weight, std::span<const double> bias, int cout,
                    int k, Tensor& y, Workspace& ws);
// Accumulates dW, db; writes dx when non-null.
void conv2d_backward(const Tensor& x, std::span<const double> weight, int cout, int k, const Tensor& dy,
                     std::span<double> dweight, std::span<double> dbias, Tensor* dx, Workspace& ws);

// 2x2 stride-2 transposed convolution, weights [cin][cout][2][2].
void conv_transpose2_forward(const Tensor& x, std::span<const double> weight, std::span<const double> bias,
                             int cout, Tensor& y, Workspace& ws);
void conv_transpose2_backward(const Tensor& x, std::span<const double> weight, int cout, const Tensor& dy,
                              std::span<double> dweight, std::span<double> dbias, Tensor& dx, Workspace& ws);

void relu_inplace(Tensor& x);
// dy *= (y > 0), with y the ReLU output.
void relu_backward(const Tensor& y, Tensor& dy);

// 2x2 stride-2 max pooling; argmax holds the flat input offset per output.
void maxpool2_forward(const Tensor& x, Tensor& y, std::vector<std::size_t>& argmax);
// dx must already have the input shape; it is overwritten.
void maxpool2_backward(const Tensor& dy, const std::vector<std::size_t>& argmax, Tensor& dx);

// Channel concatenation [a, b] and its adjoint.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& d, int ca, Tensor& da, Tensor& db);

}  // namespace nicon
