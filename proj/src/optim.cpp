#include "nicon/optim.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "nicon/binary_io.hpp"
#include "nicon/error.hpp"

namespace nicon {

namespace {
constexpr char kMagic[4] = {'N', 'I', 'C', 'N'};
constexpr std::uint16_t kCheckpointVersion = 1;
constexpr std::uint16_t kCheckpointContent = 2;
}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s, double lr) {
  if (params.size() != grads.size()) throw UsageError("adam: gradient size mismatch");
  if (s.m.size() != params.size()) {
    if (s.step != 0 || !s.m.empty()) throw UsageError("adam: state size mismatch");
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericalError("adam: non-finite gradient");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * grads[k];
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * grads[k] * grads[k];
    const double mh = s.m[k] / c1, vh = s.v[k] / c2;
    params[k] -= lr * mh / (std::sqrt(vh) + s.eps);
  }
}

double cosine_lr(std::uint64_t step, std::uint64_t total, double base_lr) {
  if (total == 0 || step >= total) return 0.0;
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
}

void save_checkpoint(const std::string& path, const UNet& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  BinaryWriter w(out);
  w.bytes(kMagic, 4);
  w.u16(kCheckpointVersion);
  w.u16(kCheckpointContent);
  const UNetConfig& c = net.config();
  w.u32(static_cast<std::uint32_t>(c.n));
  w.u32(static_cast<std::uint32_t>(c.in_channels));
  w.u32(static_cast<std::uint32_t>(c.c0));
  w.u32(static_cast<std::uint32_t>(c.levels));
  w.u8(c.desk ? 1 : 0);
  w.u64(net.params().size());
  w.f64s(net.params());
}

UNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  BinaryReader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw DataError(path + ": bad magic");
  if (r.u16() != kCheckpointVersion) throw DataError(path + ": unsupported checkpoint version");
  if (r.u16() != kCheckpointContent) throw DataError(path + ": not a checkpoint");
  UNetConfig c;
  c.n = static_cast<int>(r.u32());
  c.in_channels = static_cast<int>(r.u32());
  c.c0 = static_cast<int>(r.u32());
  c.levels = static_cast<int>(r.u32());
  c.desk = r.u8() != 0;
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw DataError(path + ": invalid network config: " + e.what());
  }
  const std::uint64_t count = r.u64();
  if (count != param_count(c)) throw DataError(path + ": parameter count does not match config");
  std::vector<double> p(count);
  r.f64s(p);
  return UNet(c, std::move(p));
}

}  // namespace nicon
