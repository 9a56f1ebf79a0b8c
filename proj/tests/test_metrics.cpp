#include "doctest.h"

#include <cmath>
#include <memory>
#include <numbers>

#include "nicon/error.hpp"
#include "nicon/metrics.hpp"

using namespace nicon;
using std::numbers::pi;

namespace {

std::shared_ptr<const Mesh> q1_mesh(int n) {
  const DomainMask dm = make_grid(n, DomainShape::unit_square);
  return std::make_shared<const Mesh>(build_mesh(dm, classify_masks(dm, BcLayout::all_dirichlet), ElementKind::rectangular));
}

template <class F>
FeFunction interpolant(int n, F&& f) {
  auto mesh = q1_mesh(n);
  Field c = sample_field(mesh->grid, Mask(n, true), f);
  return FeFunction{mesh, std::move(c)};
}

double sinsin(double x, double y) { return std::sin(pi * x) * std::sin(pi * y); }

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("discrete norms") {
  const std::vector<double> v(4, 1.0);
  CHECK(discrete_l2(v, 0.5) == doctest::Approx(1.0));
  CHECK(discrete_l2(std::vector<double>{3, 4}, 1.0) == doctest::Approx(5.0));
  const DomainMask dm = make_grid(5, DomainShape::unit_square);
  const BoundaryMasks bm = classify_masks(dm, BcLayout::all_dirichlet);
  // Single interior bump at the centre: four unit differences of size 1/h.
  Field bump(25, 0.0);
  bump[dm.grid.index(2, 2)] = 1.0;
  const double h = dm.grid.h;
  // Forward differences from (1,2), (2,1) and (2,2) (x2).
  CHECK(discrete_h1_seminorm(bump, bm, dm.grid) == doctest::Approx(std::sqrt(h * h * 4 / (h * h))));
  CHECK_THROWS_AS(discrete_h1_seminorm(Field(3, 0.0), bm, dm.grid), UsageError);
}

TEST_CASE("reference grid sizes nest the coarse grid") {
  CHECK(reference_size(16) == 271);
  CHECK(reference_size(17) == 257);
  CHECK(reference_size(33) == 257);
  CHECK(reference_size(65) == 257);
  CHECK(reference_size(9) == 257);
  CHECK(reference_size(32) == 280);
  for (int n : {16, 17, 32, 33, 64, 65, 128, 129}) CHECK((reference_size(n) - 1) % (n - 1) == 0);
}

TEST_CASE("Q1 quadrature norms of the fine reference") {
  const FeFunction ref = interpolant(257, sinsin);
  const H1Parts p = h1_difference(FeFunction{}, ref);
  CHECK(p.l2_sq == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(p.semi_sq == doctest::Approx(pi * pi / 2).epsilon(1e-4));
}

TEST_CASE("relative H1 error basics") {
  const FeFunction ref = interpolant(65, sinsin);
  CHECK(relative_h1_error(ref, ref) < 1e-14);
  CHECK(relative_h1_error(FeFunction{}, ref) == doctest::Approx(1.0));
  const FeFunction zero = interpolant(9, [](double, double) { return 0.0; });
  CHECK(relative_h1_error(zero, ref) == doctest::Approx(1.0).epsilon(1e-12));
  const FeFunction doubled = interpolant(65, [](double x, double y) { return 2 * sinsin(x, y); });
  CHECK(relative_h1_error(doubled, ref) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(relative_h1_error(ref, zero), DataError);
  // Bilinear functions are reproduced exactly by coarser Q1 spaces.
  auto bil = [](double x, double y) { return 1 + x - 2 * y + 3 * x * y; };
  CHECK(relative_h1_error(interpolant(5, bil), interpolant(257, bil)) < 1e-12);
}

TEST_CASE("prolongation agrees at nested nodes") {
  const FeFunction coarse = interpolant(16, [](double x, double y) { return std::cos(3 * x) * y; });
  const DomainMask fine = make_grid(271, DomainShape::unit_square);
  const Field pf = prolong_bilinear(coarse, fine);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i)
      CHECK(pf[fine.grid.index(18 * i, 18 * j)] == doctest::Approx(coarse.coefficients[coarse.mesh->grid.index(i, j)]).epsilon(1e-13));
}

TEST_CASE("interpolation error converges at first order in H1") {
  const FeFunction ref = interpolant(257, sinsin);
  std::vector<double> e;
  for (int n : {9, 17, 33}) e.push_back(relative_h1_error(interpolant(n, sinsin), ref));
  CHECK(std::log2(e[0] / e[1]) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::log2(e[1] / e[2]) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("norm report") {
  const DomainMask dm = make_grid(17, DomainShape::unit_square);
  const BoundaryMasks bm = classify_masks(dm, BcLayout::all_dirichlet);
  const FeFunction ref = interpolant(257, sinsin);
  const FeFunction same = interpolant(17, sinsin);
  const NormReport r = norm_report(same, ref, bm);
  CHECK(r.l2_discrete < 1e-12);
  CHECK(r.h1_seminorm_discrete < 1e-10);
  CHECK(r.relative_h1 > 0.0);
  CHECK(r.relative_h1 == doctest::Approx(relative_h1_error(same, ref)));
  CHECK(r.h1_full == doctest::Approx(std::hypot(r.l2_continuous, r.h1_seminorm_continuous)));
}

}  // TEST_SUITE
