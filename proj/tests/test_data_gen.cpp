#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "nicon/binary_io.hpp"
#include "nicon/data_gen.hpp"
#include "nicon/error.hpp"
#include "nicon/fem.hpp"
#include "nicon/metrics.hpp"

using namespace nicon;

namespace {

std::string tmp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "nicon_data_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_SUITE("data_gen") {

TEST_CASE("splitmix64 reference values") {
  SplitMix64 r(0);
  CHECK(r.next() == 0xE220A8397B1DCDAFULL);
  CHECK(r.next() == 0x6E789E6AA1B965F4ULL);
  SplitMix64 u(1);
  for (int k = 0; k < 1000; ++k) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("sample stream order") {
  const Dataset ds = generate_dataset(DatasetKind::poisson, 16, 3, 123);
  SplitMix64 rng(123);
  for (const auto& s : ds.samples)
    for (int q = 0; q < 3; ++q) {
      const SinusoidParams p = s.params[q];
      for (double v : {p.a1, p.a2, p.b1, p.b2, p.b3, p.b4}) CHECK(v == 5.0 * rng.uniform());
    }
  const auto& s0 = ds.samples[0];
  const GridSpec& g = geometry_of(ds.header).domain.grid;
  CHECK(s0.f[g.index(4, 9)] == s0.params[0](g.x(4), g.y(9)));
  CHECK(s0.g_d[g.index(15, 3)] == s0.params[1](g.x(15), g.y(3)));
  CHECK(s0.g_n[g.index(0, 5)] == s0.params[2](g.x(0), g.y(5)));
  // Off-mask boundary data vanish.
  CHECK(s0.g_d[g.index(0, 5)] == 0.0);
  CHECK(s0.g_n[g.index(4, 9)] == 0.0);
  CHECK(ds.samples[2].index == 2);

  const Dataset h = generate_dataset(DatasetKind::helmholtz, 16, 2, 5, 1.0);
  SplitMix64 hr(5);
  for (const auto& s : h.samples) {
    CHECK(s.mode_x == 1.0 + 19.0 * hr.uniform());
    CHECK(s.mode_y == 1.0 + 19.0 * hr.uniform());
    CHECK(s.mode_x >= 1.0);
    CHECK(s.mode_y <= 20.0);
  }
}

TEST_CASE("datasets are a pure function of their arguments") {
  const Dataset a = generate_dataset(DatasetKind::poisson_hole, 32, 4, 9);
  const Dataset b = generate_dataset(DatasetKind::poisson_hole, 32, 4, 9);
  const Dataset c = generate_dataset(DatasetKind::poisson_hole, 32, 4, 10);
  CHECK(a.samples[3].f == b.samples[3].f);
  CHECK(a.samples[3].f != c.samples[3].f);
  CHECK(a.header.shape == DomainShape::square_with_hole);
  CHECK(a.header.layout == BcLayout::all_dirichlet);
  CHECK(layout_of(DatasetKind::poisson) == BcLayout::left_neumann);
  CHECK(parse_dataset_kind(to_string(DatasetKind::helmholtz)) == DatasetKind::helmholtz);
  CHECK_THROWS_AS(parse_dataset_kind("wave"), UsageError);
}

TEST_CASE("binary round trip and sizes") {
  const Dataset ds = generate_dataset(DatasetKind::helmholtz, 16, 5, 77, 1.5);
  const std::string path = tmp_path("hz.bin");
  dataset_save(path, ds);
  CHECK(std::filesystem::file_size(path) == dataset_file_bytes(16, 5));
  CHECK(dataset_file_bytes(16, 5) == 40 + 5 * (18 + 3 * 256) * 8);
  const Dataset back = dataset_load(path);
  CHECK(back.header.n == 16);
  CHECK(back.header.count == 5);
  CHECK(back.header.seed == 77);
  CHECK(back.header.kappa == 1.5);
  CHECK(back.header.kind == DatasetKind::helmholtz);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(back.samples[k].f == ds.samples[k].f);
    CHECK(back.samples[k].g_d == ds.samples[k].g_d);
    CHECK(back.samples[k].mode_x == ds.samples[k].mode_x);
  }
  // Saving the loaded copy reproduces the bytes.
  const std::string again = tmp_path("hz2.bin");
  dataset_save(again, back);
  CHECK(hash_file(path) == hash_file(again));
}

TEST_CASE("corrupted containers are data errors") {
  const Dataset ds = generate_dataset(DatasetKind::poisson, 16, 2, 1);
  const std::string path = tmp_path("bad.bin");
  dataset_save(path, ds);
  std::filesystem::resize_file(path, dataset_file_bytes(16, 2) - 8);
  CHECK_THROWS_AS(dataset_load(path), DataError);
  dataset_save(path, ds);
  {
    std::ofstream app(path, std::ios::binary | std::ios::app);
    app.put('x');
  }
  CHECK_THROWS_AS(dataset_load(path), DataError);
  dataset_save(path, ds);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.put(9);
  }
  CHECK_THROWS_AS(dataset_load(path), DataError);
  CHECK_THROWS_AS(dataset_load(tmp_path("nope.bin")), DataError);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a({}) == 0xcbf29ce484222325ULL);
  const std::uint8_t a[] = {'a'};
  CHECK(fnv1a(a) == 0xaf63dc4c8601ec8cULL);
  const std::uint8_t foobar[] = {'f', 'o', 'o', 'b', 'a', 'r'};
  CHECK(fnv1a(foobar) == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("Helmholtz data: FE error against the exact solution is first order in H1") {
  const double kappa = 1.0;
  ProblemSample proto;
  proto.kind = ProblemKind::helmholtz;
  proto.kappa = kappa;
  proto.mode_x = 2.0;
  proto.mode_y = 3.0;
  const DomainMask fine = make_grid(257, DomainShape::unit_square);
  const auto fine_mesh = std::make_shared<const Mesh>(
      build_mesh(fine, classify_masks(fine, BcLayout::all_dirichlet), ElementKind::rectangular));
  const FeFunction exact = fine_function(fine_mesh, helmholtz_solution(proto, fine));
  std::vector<double> err;
  for (int n : {17, 33, 65}) {
    const DomainMask dm = make_grid(n, DomainShape::unit_square);
    const BoundaryMasks bm = classify_masks(dm, BcLayout::all_dirichlet);
    const ProblemSample s = resample(proto, dm, bm);
    const auto mesh = std::make_shared<const Mesh>(build_mesh(dm, bm, ElementKind::rectangular));
    const auto op = std::make_shared<const FemOperator>(make_fem_operator(mesh, ProblemKind::helmholtz, kappa));
    err.push_back(relative_h1_error(solve_fem(assemble_system(op, s)), exact));
  }
  CHECK(std::log2(err[0] / err[1]) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(std::log2(err[1] / err[2]) == doctest::Approx(1.0).epsilon(0.15));
}

}  // TEST_SUITE
