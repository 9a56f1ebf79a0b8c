#include "nicon/data_gen.hpp"

#include <fstream>

#include "json.hpp"

#include "nicon/binary_io.hpp"
#include "nicon/error.hpp"

namespace nicon {

namespace {
constexpr char kMagic[4] = {'N', 'I', 'C', 'N'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kContentDataset = 1;
constexpr std::size_t kParamsPerSample = 18;
}  // namespace

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::poisson: return "poisson";
    case DatasetKind::helmholtz: return "helmholtz";
    case DatasetKind::poisson_hole: return "poisson_hole";
  }
  return "?";
}

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "poisson") return DatasetKind::poisson;
  if (s == "helmholtz") return DatasetKind::helmholtz;
  if (s == "poisson_hole") return DatasetKind::poisson_hole;
  throw UsageError("unknown problem kind '" + s + "'");
}

DomainShape shape_of(DatasetKind k) {
  return k == DatasetKind::poisson_hole ? DomainShape::square_with_hole : DomainShape::unit_square;
}

BcLayout layout_of(DatasetKind k) {
  return k == DatasetKind::poisson ? BcLayout::left_neumann : BcLayout::all_dirichlet;
}

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::original: return "original";
    case Formulation::subproblem1: return "subproblem1";
    case Formulation::subproblem2: return "subproblem2";
  }
  return "?";
}

Formulation parse_formulation(const std::string& s) {
  if (s == "original") return Formulation::original;
  if (s == "subproblem1") return Formulation::subproblem1;
  if (s == "subproblem2") return Formulation::subproblem2;
  throw UsageError("unknown formulation '" + s + "'");
}

SinusoidParams sample_sinusoid(SplitMix64& rng) {
  SinusoidParams p;
  p.a1 = 5.0 * rng.uniform();
  p.a2 = 5.0 * rng.uniform();
  p.b1 = 5.0 * rng.uniform();
  p.b2 = 5.0 * rng.uniform();
  p.b3 = 5.0 * rng.uniform();
  p.b4 = 5.0 * rng.uniform();
  return p;
}

ProblemSample resample(const ProblemSample& s, const DomainMask& dm, const BoundaryMasks& masks) {
  ProblemSample out;
  out.kind = s.kind;
  out.kappa = s.kappa;
  out.params = s.params;
  out.mode_x = s.mode_x;
  out.mode_y = s.mode_y;
  out.index = s.index;
  const GridSpec& g = dm.grid;
  if (s.kind == ProblemKind::helmholtz) {
    const double a1 = s.mode_x, a2 = s.mode_y, k = s.kappa;
    out.f = sample_field(g, dm.inside, [&](double x, double y) { return helmholtz_source(a1, a2, k, x, y); });
    out.g_d = sample_field(g, masks.dirichlet, [&](double x, double y) { return helmholtz_exact(a1, a2, x, y); });
    out.g_n.assign(g.size(), 0.0);
    return out;
  }
  out.f = sample_field(g, dm.inside, s.params[0]);
  out.g_d = sample_field(g, masks.dirichlet, s.params[1]);
  out.g_n = sample_field(g, masks.neumann, s.params[2]);
  return out;
}

ProblemSample sample_from_functions(const DomainMask& dm, const BoundaryMasks& masks, const ScalarFunction& f,
                                    const ScalarFunction& g_d, const ScalarFunction& g_n, ProblemKind kind,
                                    double kappa) {
  ProblemSample s;
  s.kind = kind;
  s.kappa = kappa;
  const GridSpec& g = dm.grid;
  auto eval = [&](const ScalarFunction& fn, const Mask& where) {
    if (!fn) return Field(g.size(), 0.0);
    return sample_field(g, where, fn);
  };
  s.f = eval(f, dm.inside);
  s.g_d = eval(g_d, masks.dirichlet);
  s.g_n = eval(g_n, masks.neumann);
  return s;
}

ProblemSample zero_sample(const GridSpec& grid) {
  ProblemSample s;
  s.f.assign(grid.size(), 0.0);
  s.g_d.assign(grid.size(), 0.0);
  s.g_n.assign(grid.size(), 0.0);
  return s;
}

ProblemSample restrict_to(const ProblemSample& s, Formulation form) {
  ProblemSample out = s;
  if (form == Formulation::subproblem1) {
    std::fill(out.g_d.begin(), out.g_d.end(), 0.0);
  } else if (form == Formulation::subproblem2) {
    std::fill(out.f.begin(), out.f.end(), 0.0);
    std::fill(out.g_n.begin(), out.g_n.end(), 0.0);
  }
  return out;
}

ProblemSample make_poisson_sample(SplitMix64& rng, const DomainMask& dm, const BoundaryMasks& masks) {
  ProblemSample s;
  s.kind = ProblemKind::poisson;
  for (auto& p : s.params) p = sample_sinusoid(rng);
  return resample(s, dm, masks);
}

ProblemSample make_helmholtz_sample(SplitMix64& rng, const DomainMask& dm, const BoundaryMasks& masks,
                                    double kappa) {
  ProblemSample s;
  s.kind = ProblemKind::helmholtz;
  s.kappa = kappa;
  s.mode_x = 1.0 + 19.0 * rng.uniform();
  s.mode_y = 1.0 + 19.0 * rng.uniform();
  s.params[0].a1 = s.mode_x;
  s.params[0].a2 = s.mode_y;
  return resample(s, dm, masks);
}

Field helmholtz_solution(const ProblemSample& s, const DomainMask& dm) {
  if (s.kind != ProblemKind::helmholtz) throw UsageError("not a Helmholtz sample");
  return sample_field(dm.grid, dm.inside,
                      [&](double x, double y) { return helmholtz_exact(s.mode_x, s.mode_y, x, y); });
}

std::uint64_t dataset_block_bytes(std::uint32_t n) {
  return (kParamsPerSample + 3ULL * n * n) * sizeof(double);
}

std::uint64_t dataset_file_bytes(std::uint32_t n, std::uint64_t count) {
  return kDatasetHeaderBytes + count * dataset_block_bytes(n);
}

DatasetGeometry geometry_of(const DatasetHeader& h) {
  DatasetGeometry g;
  g.domain = make_grid(static_cast<int>(h.n), h.shape);
  g.masks = classify_masks(g.domain, h.layout);
  return g;
}

Dataset generate_dataset(DatasetKind kind, int n, std::uint64_t count, std::uint64_t seed, double kappa) {
  Dataset ds;
  ds.header.n = static_cast<std::uint32_t>(n);
  ds.header.kind = kind;
  ds.header.layout = layout_of(kind);
  ds.header.shape = shape_of(kind);
  ds.header.count = count;
  ds.header.seed = seed;
  ds.header.kappa = kind == DatasetKind::helmholtz ? kappa : 0.0;
  const DatasetGeometry geo = geometry_of(ds.header);
  SplitMix64 rng(seed);
  ds.samples.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    ProblemSample s = kind == DatasetKind::helmholtz ? make_helmholtz_sample(rng, geo.domain, geo.masks, kappa)
                                                     : make_poisson_sample(rng, geo.domain, geo.masks);
    s.index = k;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void dataset_save(const std::string& path, const Dataset& ds) {
  const DatasetHeader& h = ds.header;
  if (ds.samples.size() != h.count) throw UsageError("dataset header count does not match its samples");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  BinaryWriter w(out);
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u16(kContentDataset);
  w.u32(h.n);
  w.u8(static_cast<std::uint8_t>(h.kind));
  w.u8(static_cast<std::uint8_t>(h.layout));
  w.u8(static_cast<std::uint8_t>(h.shape));
  w.u8(0);
  w.u64(h.count);
  w.u64(h.seed);
  w.f64(h.kappa);
  const std::size_t nn = static_cast<std::size_t>(h.n) * h.n;
  for (const auto& s : ds.samples) {
    if (s.f.size() != nn || s.g_d.size() != nn || s.g_n.size() != nn)
      throw UsageError("sample grid does not match the dataset header");
    for (const auto& p : s.params)
      for (double v : {p.a1, p.a2, p.b1, p.b2, p.b3, p.b4}) w.f64(v);
    w.f64s(s.f);
    w.f64s(s.g_d);
    w.f64s(s.g_n);
  }
  out.flush();
  if (!out) throw DataError("write failed for " + path);
}

Dataset dataset_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  BinaryReader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw DataError(path + ": bad magic");
  if (r.u16() != kVersion) throw DataError(path + ": unsupported dataset version");
  if (r.u16() != kContentDataset) throw DataError(path + ": not a dataset file");
  Dataset ds;
  DatasetHeader& h = ds.header;
  h.n = r.u32();
  const std::uint8_t kind = r.u8(), layout = r.u8(), shape = r.u8();
  r.u8();
  if (kind > 2 || layout > 1 || shape > 1) throw DataError(path + ": invalid header tags");
  h.kind = static_cast<DatasetKind>(kind);
  h.layout = static_cast<BcLayout>(layout);
  h.shape = static_cast<DomainShape>(shape);
  h.count = r.u64();
  h.seed = r.u64();
  h.kappa = r.f64();
  if (h.n < 3 || h.n > 4096) throw DataError(path + ": invalid grid size");
  const std::size_t nn = static_cast<std::size_t>(h.n) * h.n;
  ds.samples.resize(h.count);
  for (std::uint64_t k = 0; k < h.count; ++k) {
    ProblemSample& s = ds.samples[k];
    s.index = k;
    s.kind = h.kind == DatasetKind::helmholtz ? ProblemKind::helmholtz : ProblemKind::poisson;
    s.kappa = h.kappa;
    for (auto& p : s.params) {
      p.a1 = r.f64();
      p.a2 = r.f64();
      p.b1 = r.f64();
      p.b2 = r.f64();
      p.b3 = r.f64();
      p.b4 = r.f64();
    }
    if (s.kind == ProblemKind::helmholtz) {
      s.mode_x = s.params[0].a1;
      s.mode_y = s.params[0].a2;
    }
    s.f.resize(nn);
    s.g_d.resize(nn);
    s.g_n.resize(nn);
    r.f64s(s.f);
    r.f64s(s.g_d);
    r.f64s(s.g_n);
  }
  if (!r.at_end()) throw DataError(path + ": trailing bytes after the last sample");
  return ds;
}

void write_sidecar(const std::string& path, const Dataset& ds) {
  const DatasetHeader& h = ds.header;
  nlohmann::ordered_json j;
  j["format"] = "NICN";
  j["version"] = kVersion;
  j["n"] = h.n;
  j["kind"] = to_string(h.kind);
  j["layout"] = to_string(h.layout);
  j["shape"] = to_string(h.shape);
  j["count"] = h.count;
  j["seed"] = h.seed;
  j["kappa"] = h.kappa;
  j["header_bytes"] = kDatasetHeaderBytes;
  j["block_bytes"] = dataset_block_bytes(h.n);
  j["file_bytes"] = dataset_file_bytes(h.n, h.count);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace nicon
