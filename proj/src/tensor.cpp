#include "nicon/tensor.hpp"

#include <cblas.h>

#include <cmath>
#include <string>

#include "nicon/error.hpp"

namespace nicon {

void Tensor::check_finite(const char* where) const {
  for (double v : data)
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in ") + where);
}

namespace {

void im2col(const Tensor& x, int k, std::vector<double>& col) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
  const std::size_t p = hw * x.n;
  col.assign(static_cast<std::size_t>(x.c) * k * k * p, 0.0);
  for (int ci = 0; ci < x.c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * p;
        for (int b = 0; b < x.n; ++b) {
          const double* src = x.data.data() + x.offset(b, ci, 0, 0);
          double* dst = row + b * hw;
          for (int yy = 0; yy < x.h; ++yy) {
            const int sy = yy + ky - pad;
            if (sy < 0 || sy >= x.h) continue;
            for (int xx = 0; xx < x.w; ++xx) {
              const int sx = xx + kx - pad;
              if (sx >= 0 && sx < x.w) dst[yy * x.w + xx] = src[sy * x.w + sx];
            }
          }
        }
      }
}

void col2im_add(const std::vector<double>& col, int k, Tensor& dx) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(dx.h) * dx.w;
  const std::size_t p = hw * dx.n;
  for (int ci = 0; ci < dx.c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * p;
        for (int b = 0; b < dx.n; ++b) {
          double* dst = dx.data.data() + dx.offset(b, ci, 0, 0);
          const double* src = row + b * hw;
          for (int yy = 0; yy < dx.h; ++yy) {
            const int sy = yy + ky - pad;
            if (sy < 0 || sy >= dx.h) continue;
            for (int xx = 0; xx < dx.w; ++xx) {
              const int sx = xx + kx - pad;
              if (sx >= 0 && sx < dx.w) dst[sy * dx.w + sx] += src[yy * dx.w + xx];
            }
          }
        }
      }
}

// NCHW -> [C, N*H*W]
void gather_channels(const Tensor& t, std::vector<double>& m) {
  const std::size_t hw = static_cast<std::size_t>(t.h) * t.w;
  const std::size_t p = hw * t.n;
  m.resize(static_cast<std::size_t>(t.c) * p);
  for (int b = 0; b < t.n; ++b)
    for (int ch = 0; ch < t.c; ++ch) {
      const double* src = t.data.data() + t.offset(b, ch, 0, 0);
      std::copy(src, src + hw, m.data() + ch * p + b * hw);
    }
}

}  // namespace

void conv2d_forward(const Tensor& x, std::span<const double> weight, std::span<const double> bias, int cout,
                    int k, Tensor& y, Workspace& ws) {
  const int kk = x.c * k * k;
  if (weight.size() != static_cast<std::size_t>(cout) * kk || bias.size() != static_cast<std::size_t>(cout))
    throw UsageError("conv2d: weight shape does not match the input channels");
  const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
  const int p = static_cast<int>(hw * x.n);
  if (k == 1)
    gather_channels(x, ws.col);
  else
    im2col(x, k, ws.col);
  ws.mat.resize(static_cast<std::size_t>(cout) * p);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, cout, p, kk, 1.0, weight.data(), kk, ws.col.data(), p,
              0.0, ws.mat.data(), p);
  y = Tensor(x.n, cout, x.h, x.w);
  for (int b = 0; b < x.n; ++b)
    for (int co = 0; co < cout; ++co) {
      const double* src = ws.mat.data() + co * static_cast<std::size_t>(p) + b * hw;
      double* dst = y.data.data() + y.offset(b, co, 0, 0);
      for (std::size_t q = 0; q < hw; ++q) dst[q] = src[q] + bias[co];
    }
}

void conv2d_backward(const Tensor& x, std::span<const double> weight, int cout, int k, const Tensor& dy,
                     std::span<double> dweight, std::span<double> dbias, Tensor* dx, Workspace& ws) {
  const int kk = x.c * k * k;
  if (dy.c != cout || dy.n != x.n || dy.h != x.h || dy.w != x.w) throw UsageError("conv2d backward: shape mismatch");
  const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
  const int p = static_cast<int>(hw * x.n);
  if (k == 1)
    gather_channels(x, ws.col);
  else
    im2col(x, k, ws.col);
  gather_channels(dy, ws.mat);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, cout, kk, p, 1.0, ws.mat.data(), p, ws.col.data(), p, 1.0,
              dweight.data(), kk);
  for (int co = 0; co < cout; ++co) {
    const double* row = ws.mat.data() + co * static_cast<std::size_t>(p);
    double s = 0.0;
    for (int q = 0; q < p; ++q) s += row[q];
    dbias[co] += s;
  }
  if (!dx) return;
  ws.mat2.resize(static_cast<std::size_t>(kk) * p);
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, kk, p, cout, 1.0, weight.data(), kk, ws.mat.data(), p, 0.0,
              ws.mat2.data(), p);
  *dx = Tensor(x.n, x.c, x.h, x.w);
  if (k == 1) {
    for (int b = 0; b < x.n; ++b)
      for (int ci = 0; ci < x.c; ++ci) {
        const double* src = ws.mat2.data() + ci * static_cast<std::size_t>(p) + b * hw;
        std::copy(src, src + hw, dx->data.data() + dx->offset(b, ci, 0, 0));
      }
  } else {
    col2im_add(ws.mat2, k, *dx);
  }
}

void conv_transpose2_forward(const Tensor& x, std::span<const double> weight, std::span<const double> bias,
                             int cout, Tensor& y, Workspace& ws) {
  const int c4 = cout * 4;
  if (weight.size() != static_cast<std::size_t>(x.c) * c4 || bias.size() != static_cast<std::size_t>(cout))
    throw UsageError("conv_transpose2: weight shape does not match the input channels");
  const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
  const int p = static_cast<int>(hw * x.n);
  gather_channels(x, ws.col);
  ws.mat.resize(static_cast<std::size_t>(c4) * p);
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, c4, p, x.c, 1.0, weight.data(), c4, ws.col.data(), p, 0.0,
              ws.mat.data(), p);
  y = Tensor(x.n, cout, 2 * x.h, 2 * x.w);
  for (int co = 0; co < cout; ++co)
    for (int ky = 0; ky < 2; ++ky)
      for (int kx = 0; kx < 2; ++kx) {
        const double* row = ws.mat.data() + (co * 4 + ky * 2 + kx) * static_cast<std::size_t>(p);
        for (int b = 0; b < x.n; ++b)
          for (int yy = 0; yy < x.h; ++yy)
            for (int xx = 0; xx < x.w; ++xx)
              y.at(b, co, 2 * yy + ky, 2 * xx + kx) = row[b * hw + yy * x.w + xx] + bias[co];
      }
}

void conv_transpose2_backward(const Tensor& x, std::span<const double> weight, int cout, const Tensor& dy,
                              std::span<double> dweight, std::span<double> dbias, Tensor& dx, Workspace& ws) {
  const int c4 = cout * 4;
  if (dy.c != cout || dy.n != x.n || dy.h != 2 * x.h || dy.w != 2 * x.w)
    throw UsageError("conv_transpose2 backward: shape mismatch");
  const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
  const int p = static_cast<int>(hw * x.n);
  gather_channels(x, ws.col);
  ws.mat.resize(static_cast<std::size_t>(c4) * p);
  for (int co = 0; co < cout; ++co)
    for (int ky = 0; ky < 2; ++ky)
      for (int kx = 0; kx < 2; ++kx) {
        double* row = ws.mat.data() + (co * 4 + ky * 2 + kx) * static_cast<std::size_t>(p);
        double s = 0.0;
        for (int b = 0; b < x.n; ++b)
          for (int yy = 0; yy < x.h; ++yy)
            for (int xx = 0; xx < x.w; ++xx) {
              const double g = dy.at(b, co, 2 * yy + ky, 2 * xx + kx);
              row[b * hw + yy * x.w + xx] = g;
              s += g;
            }
        dbias[co] += s;
      }
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, x.c, c4, p, 1.0, ws.col.data(), p, ws.mat.data(), p, 1.0,
              dweight.data(), c4);
  ws.mat2.resize(static_cast<std::size_t>(x.c) * p);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, x.c, p, c4, 1.0, weight.data(), c4, ws.mat.data(), p, 0.0,
              ws.mat2.data(), p);
  dx = Tensor(x.n, x.c, x.h, x.w);
  for (int b = 0; b < x.n; ++b)
    for (int ci = 0; ci < x.c; ++ci) {
      const double* src = ws.mat2.data() + ci * static_cast<std::size_t>(p) + b * hw;
      std::copy(src, src + hw, dx.data.data() + dx.offset(b, ci, 0, 0));
    }
}

void relu_inplace(Tensor& x) {
  for (double& v : x.data)
    if (v < 0.0) v = 0.0;
}

void relu_backward(const Tensor& y, Tensor& dy) {
  for (std::size_t k = 0; k < y.data.size(); ++k)
    if (!(y.data[k] > 0.0)) dy.data[k] = 0.0;
}

void maxpool2_forward(const Tensor& x, Tensor& y, std::vector<std::size_t>& argmax) {
  if (x.h % 2 || x.w % 2) throw UsageError("maxpool2: odd spatial size");
  y = Tensor(x.n, x.c, x.h / 2, x.w / 2);
  argmax.resize(y.size());
  std::size_t k = 0;
  for (int b = 0; b < x.n; ++b)
    for (int ch = 0; ch < x.c; ++ch)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx, ++k) {
          std::size_t best = x.offset(b, ch, 2 * yy, 2 * xx);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t o = x.offset(b, ch, 2 * yy + dy, 2 * xx + dx);
              if (x.data[o] > x.data[best]) best = o;
            }
          argmax[k] = best;
          y.data[k] = x.data[best];
        }
}

void maxpool2_backward(const Tensor& dy, const std::vector<std::size_t>& argmax, Tensor& dx) {
  std::fill(dx.data.begin(), dx.data.end(), 0.0);
  for (std::size_t k = 0; k < dy.data.size(); ++k) dx.data[argmax[k]] += dy.data[k];
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) throw UsageError("concat: shape mismatch");
  Tensor out(a.n, a.c + b.c, a.h, a.w);
  const std::size_t ca = static_cast<std::size_t>(a.c) * a.h * a.w;
  const std::size_t cb = static_cast<std::size_t>(b.c) * b.h * b.w;
  for (int s = 0; s < a.n; ++s) {
    std::copy(a.data.begin() + s * ca, a.data.begin() + (s + 1) * ca, out.data.begin() + s * (ca + cb));
    std::copy(b.data.begin() + s * cb, b.data.begin() + (s + 1) * cb, out.data.begin() + s * (ca + cb) + ca);
  }
  return out;
}

void split_channels(const Tensor& d, int ca, Tensor& da, Tensor& db) {
  da = Tensor(d.n, ca, d.h, d.w);
  db = Tensor(d.n, d.c - ca, d.h, d.w);
  const std::size_t sa = static_cast<std::size_t>(ca) * d.h * d.w;
  const std::size_t sb = static_cast<std::size_t>(d.c - ca) * d.h * d.w;
  for (int s = 0; s < d.n; ++s) {
    std::copy(d.data.begin() + s * (sa + sb), d.data.begin() + s * (sa + sb) + sa, da.data.begin() + s * sa);
    std::copy(d.data.begin() + s * (sa + sb) + sa, d.data.begin() + (s + 1) * (sa + sb), db.data.begin() + s * sb);
  }
}

}  // namespace nicon
