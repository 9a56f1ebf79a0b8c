#pragma once

// Seeded problem generation and the NICN dataset container.
//
// File layout (little-endian):
//   0  "NICN"            8  u32 N             16 u64 count
//   4  u16 version = 1   12 u8 kind, u8 layout, u8 shape, u8 0
//   6  u16 content = 1   24 u64 seed          32 f64 kappa
// followed by count blocks of 18 + 3 N^2 binary64 values: the sinusoid
// parameters of (f, g_D, g_N) (Helmholtz: a1, a2 then zeros) and the f, g_D,
// g_N images.

#include <cstdint>
#include <string>
#include <vector>

#include "nicon/geometry.hpp"
#include "nicon/problem.hpp"
#include "nicon/rng.hpp"

namespace nicon {

enum class DatasetKind : std::uint8_t { poisson = 0, helmholtz = 1, poisson_hole = 2 };

std::string to_string(DatasetKind k);
DatasetKind parse_dataset_kind(const std::string& s);

// Geometry implied by a kind: poisson -> unit square / left Neumann,
// helmholtz -> unit square / all Dirichlet, poisson_hole -> hole / all Dirichlet.
DomainShape shape_of(DatasetKind k);
BcLayout layout_of(DatasetKind k);

// Six draws a1, a2, b1..b4, each uniform on [0, 5].
SinusoidParams sample_sinusoid(SplitMix64& rng);

// f on every inside pixel; g_D, g_N on their masks only.
ProblemSample make_poisson_sample(SplitMix64& rng, const DomainMask& dm, const BoundaryMasks& masks);
// a1, a2 uniform on [1, 20]; g_D is the trace of the exact solution.
ProblemSample make_helmholtz_sample(SplitMix64& rng, const DomainMask& dm, const BoundaryMasks& masks,
                                    double kappa);

// Exact Helmholtz solution on the grid (inside pixels).
Field helmholtz_solution(const ProblemSample& s, const DomainMask& dm);

struct DatasetHeader {
  std::uint32_t n = 0;
  DatasetKind kind = DatasetKind::poisson;
  BcLayout layout = BcLayout::left_neumann;
  DomainShape shape = DomainShape::unit_square;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  double kappa = 0.0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<ProblemSample> samples;
};

constexpr std::uint64_t kDatasetHeaderBytes = 40;
std::uint64_t dataset_block_bytes(std::uint32_t n);
std::uint64_t dataset_file_bytes(std::uint32_t n, std::uint64_t count);

Dataset generate_dataset(DatasetKind kind, int n, std::uint64_t count, std::uint64_t seed, double kappa = 1.0);

void dataset_save(const std::string& path, const Dataset& ds);
// Throws DataError on bad magic/version, truncation or trailing bytes.
Dataset dataset_load(const std::string& path);
// JSON header metadata next to the binary file.
void write_sidecar(const std::string& path, const Dataset& ds);

// Geometry of a dataset.
struct DatasetGeometry {
  DomainMask domain;
  BoundaryMasks masks;
};
DatasetGeometry geometry_of(const DatasetHeader& h);

}  // namespace nicon
