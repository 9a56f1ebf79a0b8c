#pragma once

// Glue between the discretizations and training: network input images,
// residual loss with its gradient w.r.t. the predicted image, Dirichlet
// post-processing and the classical oracle, for one method on one geometry.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nicon/data_gen.hpp"
#include "nicon/fd.hpp"
#include "nicon/fem.hpp"
#include "nicon/tensor.hpp"

namespace nicon {

enum class Method { fd5, fd9, fe_tri, fe_rect };

std::string to_string(Method m);
Method parse_method(const std::string& s);
bool is_fd(Method m);

// Samples of one formulation, with their assembled FE systems when needed.
struct PreparedSet {
  Formulation formulation = Formulation::original;
  std::vector<ProblemSample> samples;
  std::vector<FemSystem> systems;
  std::size_t size() const { return samples.size(); }
};

class Discretization {
 public:
  Discretization(Method method, const DatasetGeometry& geometry, ProblemKind kind = ProblemKind::poisson,
                 double kappa = 0.0, LossWeights weights = {});

  Method method() const { return method_; }
  const GridSpec& grid() const { return geo_.domain.grid; }
  const DatasetGeometry& geometry() const { return geo_; }
  const BoundaryMasks& masks() const { return geo_.masks; }
  std::shared_ptr<const Mesh> mesh() const { return mesh_; }
  std::shared_ptr<const FemOperator> fem_operator() const { return op_; }
  const Stencil& stencil() const { return stencil_; }
  const LossWeights& weights() const { return weights_; }

  // FD: (f, g_D[, g_N]) for original, (f[, g_N]) for subproblem1, g_D for
  // subproblem2; g_N only when the layout has a Neumann edge. FE: one image
  // of b, b1 or b2.
  int input_channels(Formulation form) const;

  PreparedSet prepare(std::span<const ProblemSample> samples, Formulation form) const;

  // (B, C, N, N) network input for the selected samples.
  Tensor inputs(const PreparedSet& set, std::span<const std::size_t> idx) const;

  // Mean residual loss of the predicted images (B, 1, N, N). When grad is
  // non-null it receives d(mean loss)/d(prediction) with the same shape.
  double loss(const PreparedSet& set, std::span<const std::size_t> idx, const Tensor& pred, Tensor* grad) const;

  // Residual loss of one full-grid nodal vector.
  double sample_loss(const PreparedSet& set, std::size_t k, std::span<const double> u) const;

  // Post-processed nodal field: FD overwrites M_D by g_D (zeros for
  // subproblem1); FE keeps the free values and lifts by U_D.
  Field postprocess(const PreparedSet& set, std::size_t k, std::span<const double> image) const;

  // Classical solution of sample k on this grid (CG to 1e-12).
  Field classical(const PreparedSet& set, std::size_t k) const;

  // Nodal field as a FE function; FD fields are read as Q1 on the pixel mesh.
  FeFunction as_function(Field values) const;

 private:
  Method method_;
  DatasetGeometry geo_;
  ProblemKind kind_;
  double kappa_;
  LossWeights weights_;
  Stencil stencil_;
  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<const FemOperator> op_;
};

}  // namespace nicon
