#pragma once

// P1 / Q1 finite elements on the pixel mesh: element kernels, global
// assembly with Dirichlet elimination, the b = b1 + b2 load split, the FE
// residual loss and nodal FE functions.

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "nicon/geometry.hpp"
#include "nicon/linalg.hpp"
#include "nicon/problem.hpp"

namespace nicon {

// Element matrices for 3 (P1) or 4 (Q1) vertices given counterclockwise.
// Q1 uses the isoparametric bilinear map; stiffness by 2x2 Gauss and mass
// by 3x3 Gauss. Throws DataError for non-positive Jacobians.
DenseMatrix local_stiffness(std::span<const std::array<double, 2>> vertices, ElementKind kind);
DenseMatrix local_mass(std::span<const std::array<double, 2>> vertices, ElementKind kind);

// Assembled operators of one mesh, shared by every sample on it.
struct FemOperator {
  std::shared_ptr<const Mesh> mesh;
  ProblemKind kind = ProblemKind::poisson;
  double kappa = 0.0;

  CsrMatrix stiffness_full;  // N^2 x N^2, pre-elimination
  CsrMatrix mass_full;

  std::vector<int> free_nodes;       // dof -> pixel
  std::vector<int> free_map;         // pixel -> dof or -1
  std::vector<int> dirichlet_nodes;  // constrained pixels, ascending

  CsrMatrix stiffness;  // A over free dofs
  CsrMatrix mass;       // M over free dofs
  CsrMatrix system;     // A (Poisson) or A - kappa^2 M (Helmholtz)
  CsrMatrix coupling;   // system rows over free dofs, columns over dirichlet_nodes

  std::size_t dofs() const { return free_nodes.size(); }
};

// Helmholtz operators are checked for definiteness here (NumericalError when
// the check fails), so later CG solves are valid.
FemOperator make_fem_operator(std::shared_ptr<const Mesh> mesh, ProblemKind kind = ProblemKind::poisson,
                              double kappa = 0.0);

// One assembled sample. For Poisson b1 = int f psi + int_{Gamma_N} g_N psi; for
// Helmholtz the equation is multiplied by -1 so b1 = -int f psi + int g_N psi.
// b2 = -system[free, D] U_D.
struct FemSystem {
  std::shared_ptr<const FemOperator> op;
  std::vector<double> b;
  std::vector<double> b1;
  std::vector<double> b2;
  std::vector<double> dirichlet_values;  // U_D on op->dirichlet_nodes
};

// Throws DataError when the sample grid does not match the mesh or the
// operator has no free dofs.
FemSystem assemble_system(std::shared_ptr<const FemOperator> op, const ProblemSample& sample);

// Nodal FE function over every pixel of the mesh grid; inactive pixels are 0.
struct FeFunction {
  std::shared_ptr<const Mesh> mesh;
  Field coefficients;

  // Point evaluation of the P1 / Q1 interpolant. Throws DataError when (x, y)
  // is not covered by an element.
  double evaluate(double x, double y) const;
};

// U = W + U_D: free values from `free`, Dirichlet nodes from the system data.
FeFunction make_fe_function(const FemSystem& system, std::span<const double> free);

// Free-dof restriction of a full-grid field.
std::vector<double> free_values(const FemOperator& op, std::span<const double> field);

// Solves system w = b (CG to tol 1e-12) and lifts by U_D. NumericalError on
// non-convergence.
FeFunction solve_fem(const FemSystem& system, const CgOptions& opts = {});

// ||b - A u||_2^2 for u over the free dofs.
double fem_loss(std::span<const double> u, const FemSystem& system);
// Same loss; adds scale * d/du into grad (length dofs()).
double fem_loss_gradient(std::span<const double> u, const FemSystem& system, std::span<double> grad,
                         double scale);
// Batch mean of fem_loss.
double fem_total_loss(std::span<const FemSystem> systems, std::span<const std::vector<double>> predictions);

// Coefficient-wise sum. Throws UsageError when the meshes differ.
FeFunction superpose(const FeFunction& a, const FeFunction& b);

// Free-dof vector scattered onto an N x N image, zeros elsewhere.
Field dof_image(const FemOperator& op, std::span<const double> v);

// int |grad v_h|^2 and int v_h^2 by element quadrature of the full-grid
// coefficient vector (independent of the assembled matrices).
double gradient_energy(const Mesh& mesh, std::span<const double> coefficients);
double l2_energy(const Mesh& mesh, std::span<const double> coefficients);

struct DefinitenessReport {
  double stiffness_lambda_min = 0.0;  // lambda_min(A)
  double mass_lambda_max_bound = 0.0;  // Gershgorin bound on lambda_max(M)
  double kappa_squared = 0.0;
  double system_lambda_min = 0.0;      // lambda_min(A - kappa^2 M), inverse iteration
  bool positive_definite = false;
};

// Positive definiteness of the system matrix, certified by
// kappa^2 lambda_max(M) < lambda_min(A) and confirmed by inverse iteration.
DefinitenessReport check_definiteness(const FemOperator& op);

double mass_lambda_min(const FemOperator& op);

struct FemTheoremReport {
  double energy = 0.0;               // e^T A e
  double cauchy_schwarz_rhs = 0.0;   // ||e||_2 ||b - A u||_2
  bool cauchy_schwarz_holds = true;
  double coeff_norm_sq = 0.0;        // ||e||_2^2
  double mass_bound = 0.0;           // e^T M e / lambda_min(M)
  bool mass_bound_holds = true;
  double residual_norm = 0.0;        // ||b - A u||_2
  double chain_constant = 0.0;       // sqrt(e^T A e) h / ||b - A u||_2 (0 if residual = 0)
};

// Checks against the FE solution u*; e = u* - u. Requires homogeneous Dirichlet
// data (UsageError otherwise). lambda_min(M) is supplied by the caller.
FemTheoremReport fem_theorem_check(std::span<const double> u, const FemSystem& system, double lambda_min_mass,
                                   std::span<const double> solution);

}  // namespace nicon
