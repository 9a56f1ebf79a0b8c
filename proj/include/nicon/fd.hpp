#pragma once

// Finite-difference Laplacian as a fixed 3x3 convolution, the FD residual
// losses, Dirichlet post-processing and the classical FD solver used as oracle.

#include <array>
#include <span>
#include <vector>

#include "nicon/geometry.hpp"
#include "nicon/linalg.hpp"
#include "nicon/problem.hpp"

namespace nicon {

enum class StencilKind { five_point, nine_point };

struct Stencil {
  StencilKind kind = StencilKind::five_point;
  // Row-major over (dj, di) in {-1, 0, 1}^2.
  std::array<int, 9> kernel{};
  // Delta_h u = alpha (K * u).
  double alpha = 0.0;

  static Stencil make(StencilKind kind, double h);
  int weight(int di, int dj) const { return kernel[(dj + 1) * 3 + (di + 1)]; }
  int sum_of_squares() const;
};

struct LossWeights {
  double f = 1.0;
  double d = 1.0;
  double n = 1.0;
};

struct LossBreakdown {
  double l_f = 0.0;
  double l_d = 0.0;
  double l_n = 0.0;
  double total = 0.0;
  LossWeights weights;
};

// alpha (K * u) at every M_f pixel, 0 elsewhere. Throws DataError if the
// stencil of an interior pixel reaches a pixel outside the domain.
Field laplace_apply(std::span<const double> u, const Stencil& stencil, const BoundaryMasks& masks,
                    const GridSpec& grid);

// (1/|M_f|) sum |K * u + f / alpha|^2
double fd_interior_loss(std::span<const double> u, std::span<const double> f, const Stencil& stencil,
                        const BoundaryMasks& masks, const GridSpec& grid);
// (1/|M_D|) sum |u - g_D|^2
double fd_dirichlet_loss(std::span<const double> u, std::span<const double> g_d,
                         const BoundaryMasks& masks);
// (1/|M_N|) sum |u(inner) - u(node) + h g_N|^2, i.e. the one-sided difference
// toward the interior neighbour with grad u . n = (u(node) - u(inner)) / h.
double fd_neumann_loss(std::span<const double> u, std::span<const double> g_n,
                       const BoundaryMasks& masks, double h);

// Weighted per-sample loss; zero-size masks contribute 0.
LossBreakdown fd_sample_loss(std::span<const double> u, std::span<const double> f,
                             std::span<const double> g_d, std::span<const double> g_n,
                             const Stencil& stencil, const BoundaryMasks& masks, const GridSpec& grid,
                             const LossWeights& weights = {});

// Same loss; adds scale * d(total)/du into grad.
LossBreakdown fd_loss_gradient(std::span<const double> u, std::span<const double> f,
                               std::span<const double> g_d, std::span<const double> g_n,
                               const Stencil& stencil, const BoundaryMasks& masks, const GridSpec& grid,
                               const LossWeights& weights, std::span<double> grad, double scale);

// Batch mean of the per-sample weighted losses (the FD-CON training objective).
LossBreakdown fd_total_loss(std::span<const ProblemSample> samples, std::span<const Field> predictions,
                            const Stencil& stencil, const BoundaryMasks& masks, const GridSpec& grid,
                            const LossWeights& weights = {});

// Copy of u with the M_D pixels overwritten by g_D.
Field postprocess_dirichlet(std::span<const double> u, std::span<const double> g_d,
                            const BoundaryMasks& masks);

// Linear system over the unknown pixels M_f u M_N (ascending pixel order).
// Interior rows are -K with Dirichlet neighbours eliminated into rhs, so they
// read -(K * u) = f / alpha; Neumann rows read u(node) - u(inner) = h g_N.
// `reduced` eliminates the Neumann unknowns as well and is SPD over M_f.
struct FdSystem {
  CsrMatrix a;
  std::vector<double> rhs;
  std::vector<int> unknown_nodes;  // row -> pixel
  std::vector<int> unknown_map;    // pixel -> row or -1
  CsrMatrix reduced;
  std::vector<double> reduced_rhs;
  std::vector<int> interior_nodes;  // reduced row -> pixel
};

FdSystem assemble_fd(const ProblemSample& sample, const Stencil& stencil, const BoundaryMasks& masks,
                     const GridSpec& grid);

// Classical FD solution on the full grid (outside pixels 0). Throws
// NumericalError when CG does not converge.
Field solve_fd(const ProblemSample& sample, const Stencil& stencil, const BoundaryMasks& masks,
               const GridSpec& grid, const CgOptions& opts = {});

// Sparse N^2-column operator whose row r evaluates K * u at the r-th M_f pixel.
CsrMatrix fd_interior_operator(const Stencil& stencil, const BoundaryMasks& masks, const GridSpec& grid);

// A_I = alpha (-K) over M_f with homogeneous Dirichlet data eliminated.
CsrMatrix fd_interior_matrix(const Stencil& stencil, const BoundaryMasks& masks, const GridSpec& grid);

struct FdTheoremReport {
  double error_seminorm = 0.0;        // |u_h - u_hat|_{1,h}
  double residual_norm = 0.0;         // || A~_I u_hat_I - f_I / alpha ||_2
  double energy = 0.0;                // h^2 e^T A_I e
  double cauchy_schwarz_rhs = 0.0;    // h ||e||_{0,h} ||f_I - A_I u_hat_I||_2
  bool cauchy_schwarz_holds = true;
  double norm_ratio = 0.0;            // h^2 e^T A_I e / |e|_{1,h}^2 (0 if e = 0)
  double chain_constant = 0.0;        // |e|_{1,h} / (h^-1 residual_norm) (0 if residual = 0)
};

// Building blocks of the FD error estimate in the homogeneous, all-Dirichlet
// setting. Throws UsageError for any other layout.
FdTheoremReport fd_theorem_check(std::span<const double> u_hat, const ProblemSample& sample,
                                 const Stencil& stencil, const BoundaryMasks& masks, const GridSpec& grid);

}  // namespace nicon
