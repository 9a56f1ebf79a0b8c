#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "nicon/geometry.hpp"

namespace nicon {

// phi(x, y) = a1 sin(b1 x + b2 y) + a2 cos(b3 x + b4 y)
struct SinusoidParams {
  double a1 = 0.0, a2 = 0.0;
  double b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0;

  double operator()(double x, double y) const {
    return a1 * std::sin(b1 * x + b2 * y) + a2 * std::cos(b3 * x + b4 * y);
  }
  // Partial derivatives, used for analytic Neumann data in tests.
  double dx(double x, double y) const {
    return a1 * b1 * std::cos(b1 * x + b2 * y) - a2 * b3 * std::sin(b3 * x + b4 * y);
  }
  double dy(double x, double y) const {
    return a1 * b2 * std::cos(b1 * x + b2 * y) - a2 * b4 * std::sin(b3 * x + b4 * y);
  }
};

enum class ProblemKind : std::uint8_t { poisson = 0, helmholtz = 1 };

// One problem instance. Poisson: -Lap u = f, u = g_D on M_D, grad u . n = g_N
// on M_N. Helmholtz: Lap u + kappa^2 u = f with u = g_D, and exact solution
// sin(a1 pi x) sin(a2 pi y).
struct ProblemSample {
  ProblemKind kind = ProblemKind::poisson;
  double kappa = 0.0;
  // Poisson: generating parameters of f, g_D, g_N (in that order).
  std::array<SinusoidParams, 3> params{};
  // Helmholtz: mode numbers of the exact solution.
  double mode_x = 0.0, mode_y = 0.0;
  // Grid evaluations; boundary fields are zero off their masks.
  Field f;
  Field g_d;
  Field g_n;
  std::uint64_t index = 0;
};

inline double helmholtz_exact(double a1, double a2, double x, double y) {
  constexpr double pi = 3.14159265358979323846;
  return std::sin(a1 * pi * x) * std::sin(a2 * pi * y);
}

inline double helmholtz_source(double a1, double a2, double kappa, double x, double y) {
  constexpr double pi = 3.14159265358979323846;
  const double u = helmholtz_exact(a1, a2, x, y);
  return -(a1 * pi) * (a1 * pi) * u - (a2 * pi) * (a2 * pi) * u + kappa * kappa * u;
}

// Re-evaluates a sample's analytic data on another grid/mask pair, e.g. the
// fine reference grid.
ProblemSample resample(const ProblemSample& s, const DomainMask& dm, const BoundaryMasks& masks);

using ScalarFunction = std::function<double(double, double)>;

// Builds a sample from closed-form data; g_d and g_n are written on their
// masks only. Empty functions are treated as zero.
ProblemSample sample_from_functions(const DomainMask& dm, const BoundaryMasks& masks,
                                    const ScalarFunction& f, const ScalarFunction& g_d,
                                    const ScalarFunction& g_n,
                                    ProblemKind kind = ProblemKind::poisson, double kappa = 0.0);

enum class Formulation { original, subproblem1, subproblem2 };

std::string to_string(Formulation f);
Formulation parse_formulation(const std::string& s);

// Data of the two superposition subproblems: subproblem1 keeps (f, g_N) and
// zeroes g_D, subproblem2 keeps g_D and zeroes (f, g_N).
ProblemSample restrict_to(const ProblemSample& s, Formulation form);

// A sample whose data all vanish (f = g_D = g_N = 0).
ProblemSample zero_sample(const GridSpec& grid);

}  // namespace nicon
