#pragma once

// Discrete and continuous norms, prolongation of FE functions onto a fine
// grid and the relative H1 error against a fine reference.

#include <memory>
#include <span>

#include "nicon/fem.hpp"
#include "nicon/geometry.hpp"

namespace nicon {

// sqrt(h^2 sum v^2)
double discrete_l2(std::span<const double> v, double h);

// sqrt(h^2 sum_{M_f} |grad_h v|^2) with forward differences; values off the
// interior mask are read as zero.
double discrete_h1_seminorm(std::span<const double> v, const BoundaryMasks& masks, const GridSpec& grid);

// Evaluates a FE function at every inside node of `fine` (zeros elsewhere).
Field prolong_bilinear(const FeFunction& coarse, const DomainMask& fine);

// Q1 function on a fine rectangular mesh built from nodal values.
FeFunction fine_function(std::shared_ptr<const Mesh> fine_mesh, Field values);

// Reference grid size for predictions at n: the smallest (n-1)k + 1 >= 257,
// so coarse nodes are nested in the fine grid.
int reference_size(int n);

struct H1Parts {
  double l2_sq = 0.0;
  double semi_sq = 0.0;
  double full() const;
};

// Squared L2 norm and H1 seminorm of reference minus prolonged prediction
// over the reference's Q1 cells (2x2 Gauss for gradients). An empty
// prediction (null mesh) stands for zero.
H1Parts h1_difference(const FeFunction& prediction, const FeFunction& reference);

struct NormReport {
  double l2_discrete = 0.0;             // ||u_ref - v||_{0,h} at prediction nodes
  double h1_seminorm_discrete = 0.0;    // |u_ref - v|_{1,h}
  double l2_continuous = 0.0;           // ||u_ref - v||_{L2}
  double h1_seminorm_continuous = 0.0;  // |u_ref - v|_{H1}
  double h1_full = 0.0;                 // ||u_ref - v||_{H1}
  double relative_h1 = 0.0;             // h1_full / ||u_ref||_{H1}
};

// Throws DataError for a zero-norm reference.
double relative_h1_error(const FeFunction& prediction, const FeFunction& reference);

NormReport norm_report(const FeFunction& prediction, const FeFunction& reference, const BoundaryMasks& masks);

}  // namespace nicon
