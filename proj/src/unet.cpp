#include "nicon/unet.hpp"

#include <cmath>

#include "nicon/error.hpp"
#include "nicon/rng.hpp"

namespace nicon {

UNetConfig UNetConfig::resolution_rule(int n, int in_channels) {
  UNetConfig c;
  c.n = n;
  c.in_channels = in_channels;
  switch (n) {
    case 16: c.levels = 2; break;
    case 32: c.levels = 3; break;
    case 64: c.levels = 4; break;
    case 128: c.levels = 5; break;
    default: throw UsageError("resolution rule defined for N in {16, 32, 64, 128}, got " + std::to_string(n));
  }
  c.c0 = n / 2;
  c.desk = false;
  return c;
}

void UNetConfig::validate() const {
  if (in_channels < 1 || in_channels > 3) throw UsageError("in_channels must be 1, 2 or 3");
  if (c0 < 1) throw UsageError("c0 must be positive");
  if (levels < 1) throw UsageError("levels must be positive");
  const int div = 1 << levels;
  if (n % div != 0) throw UsageError("N must be divisible by 2^L");
  if (n / div < 2) throw UsageError("bottleneck must be at least 2x2");
}

std::size_t param_count(const UNetConfig& cfg) {
  cfg.validate();
  auto conv = [](std::size_t cin, std::size_t cout, std::size_t k) { return cout * cin * k * k + cout; };
  std::size_t total = 0;
  std::size_t cin = cfg.in_channels;
  for (int l = 0; l < cfg.levels; ++l) {
    const std::size_t c = cfg.channels(l);
    total += conv(cin, c, 3) + conv(c, c, 3);
    cin = c;
  }
  const std::size_t cb = cfg.channels(cfg.levels);
  total += conv(cin, cb, 3) + conv(cb, cb, 3);
  for (int l = cfg.levels - 1; l >= 0; --l) {
    const std::size_t c = cfg.channels(l), cu = cfg.channels(l + 1);
    total += cu * c * 4 + c;  // transposed 2x2
    total += conv(2 * c, c, 3) + conv(c, c, 3);
  }
  total += conv(cfg.c0, 1, 1);
  return total;
}

UNet::Conv UNet::add_conv(const std::string& name, int cin, int cout, int k, bool transposed) {
  Conv c;
  c.cin = cin;
  c.cout = cout;
  c.k = k;
  const std::size_t wsize = static_cast<std::size_t>(cin) * cout * k * k;
  c.w = params_.size();
  blocks_.push_back({name + ".weight", c.w, wsize});
  c.b = c.w + wsize;
  blocks_.push_back({name + ".bias", c.b, static_cast<std::size_t>(cout)});
  params_.resize(c.b + cout, 0.0);
  convs_.push_back(c);
  transposed_.push_back(transposed);
  return c;
}

void UNet::layout() {
  cfg_.validate();
  int cin = cfg_.in_channels;
  enc_.resize(cfg_.levels);
  for (int l = 0; l < cfg_.levels; ++l) {
    const int c = cfg_.channels(l);
    const std::string p = "enc" + std::to_string(l);
    enc_[l].c1 = add_conv(p + ".conv1", cin, c, 3, false);
    enc_[l].c2 = add_conv(p + ".conv2", c, c, 3, false);
    cin = c;
  }
  const int cb = cfg_.channels(cfg_.levels);
  mid_.c1 = add_conv("mid.conv1", cin, cb, 3, false);
  mid_.c2 = add_conv("mid.conv2", cb, cb, 3, false);
  dec_.resize(cfg_.levels);
  for (int l = cfg_.levels - 1; l >= 0; --l) {
    const int c = cfg_.channels(l);
    const std::string p = "dec" + std::to_string(l);
    dec_[l].up = add_conv(p + ".up", cfg_.channels(l + 1), c, 2, true);
    dec_[l].c1 = add_conv(p + ".conv1", 2 * c, c, 3, false);
    dec_[l].c2 = add_conv(p + ".conv2", c, c, 3, false);
  }
  head_ = add_conv("head", cfg_.c0, 1, 1, false);
}

void UNet::init(std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (std::size_t k = 0; k < convs_.size(); ++k) {
    const Conv& c = convs_[k];
    // Transposed 2x2 stride-2 layers see one tap per input channel.
    const double fan_in = transposed_[k] ? c.cin : static_cast<double>(c.cin) * c.k * c.k;
    const double bound = std::sqrt(6.0 / fan_in);
    const std::size_t wsize = c.b - c.w;
    for (std::size_t i = 0; i < wsize; ++i) params_[c.w + i] = rng.uniform(-bound, bound);
  }
}

UNet::UNet(const UNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  layout();
  init(seed);
}

UNet::UNet(const UNetConfig& cfg, std::vector<double> params) : cfg_(cfg) {
  layout();
  if (params.size() != params_.size())
    throw DataError("parameter vector has " + std::to_string(params.size()) + " entries, network needs " +
                    std::to_string(params_.size()));
  params_ = std::move(params);
}

namespace {

std::span<double> slice(std::vector<double>& v, std::size_t off, std::size_t n) { return {v.data() + off, n}; }

}  // namespace

Tensor UNet::forward(const Tensor& x) {
  if (x.c != cfg_.in_channels || x.h != cfg_.n || x.w != cfg_.n)
    throw UsageError("U-Net input shape does not match the configuration");
  auto conv = [&](const Conv& c, const Tensor& in, Tensor& out, bool relu) {
    conv2d_forward(in, slice(params_, c.w, c.b - c.w), slice(params_, c.b, c.cout), c.cout, c.k, out, ws_);
    if (relu) relu_inplace(out);
  };
  Tensor cur = x;
  for (auto& lv : enc_) {
    lv.in = std::move(cur);
    conv(lv.c1, lv.in, lv.a1, true);
    conv(lv.c2, lv.a1, lv.a2, true);
    maxpool2_forward(lv.a2, lv.pooled, lv.argmax);
    cur = lv.pooled;
  }
  mid_.in = std::move(cur);
  conv(mid_.c1, mid_.in, mid_.a1, true);
  conv(mid_.c2, mid_.a1, mid_.a2, true);
  cur = mid_.a2;
  for (int l = cfg_.levels - 1; l >= 0; --l) {
    Up& d = dec_[l];
    d.in = std::move(cur);
    const Conv& u = d.up;
    conv_transpose2_forward(d.in, slice(params_, u.w, u.b - u.w), slice(params_, u.b, u.cout), u.cout,
                            d.upsampled, ws_);
    d.cat = concat_channels(d.upsampled, enc_[l].a2);
    conv(d.c1, d.cat, d.a1, true);
    conv(d.c2, d.a1, d.a2, true);
    cur = d.a2;
  }
  head_in_ = std::move(cur);
  Tensor out;
  conv(head_, head_in_, out, false);
  out.check_finite("U-Net output");
  have_forward_ = true;
  return out;
}

void UNet::backward(const Tensor& upstream, std::vector<double>& grad) {
  if (!have_forward_) throw UsageError("backward called before forward");
  if (upstream.c != 1 || upstream.n != head_in_.n || upstream.h != cfg_.n || upstream.w != cfg_.n)
    throw UsageError("upstream gradient shape does not match the output");
  grad.assign(params_.size(), 0.0);
  auto conv_back = [&](const Conv& c, const Tensor& in, const Tensor& dout, Tensor* din) {
    conv2d_backward(in, slice(params_, c.w, c.b - c.w), c.cout, c.k, dout, slice(grad, c.w, c.b - c.w),
                    slice(grad, c.b, c.cout), din, ws_);
  };

  Tensor dcur;
  conv_back(head_, head_in_, upstream, &dcur);
  std::vector<Tensor> dskip(cfg_.levels);
  for (int l = 0; l < cfg_.levels; ++l) {
    Up& d = dec_[l];
    Tensor da2 = std::move(dcur), da1, dcat, dup;
    relu_backward(d.a2, da2);
    conv_back(d.c2, d.a1, da2, &da1);
    relu_backward(d.a1, da1);
    conv_back(d.c1, d.cat, da1, &dcat);
    split_channels(dcat, d.upsampled.c, dup, dskip[l]);
    const Conv& u = d.up;
    conv_transpose2_backward(d.in, slice(params_, u.w, u.b - u.w), u.cout, dup, slice(grad, u.w, u.b - u.w),
                             slice(grad, u.b, u.cout), dcur, ws_);
  }
  {
    Tensor da2 = std::move(dcur), da1;
    relu_backward(mid_.a2, da2);
    conv_back(mid_.c2, mid_.a1, da2, &da1);
    relu_backward(mid_.a1, da1);
    conv_back(mid_.c1, mid_.in, da1, &dcur);
  }
  for (int l = cfg_.levels - 1; l >= 0; --l) {
    Level& lv = enc_[l];
    Tensor da2(lv.a2.n, lv.a2.c, lv.a2.h, lv.a2.w), da1;
    maxpool2_backward(dcur, lv.argmax, da2);
    for (std::size_t k = 0; k < da2.data.size(); ++k) da2.data[k] += dskip[l].data[k];
    relu_backward(lv.a2, da2);
    conv_back(lv.c2, lv.a1, da2, &da1);
    relu_backward(lv.a1, da1);
    conv_back(lv.c1, lv.in, da1, l == 0 ? nullptr : &dcur);
  }
}

}  // namespace nicon
