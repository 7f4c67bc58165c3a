#pragma once

#include <cstddef>

#include "nnssgd/linalg.hpp"

namespace nnssgd {

// Dense reference for  min_X alpha ||P_Omega(X) - Z||_F^2 + beta ||X||_*
// by proximal gradient with singular-value soft-thresholding. Small problems
// only (full SVD per iteration); used to check the stochastic solver.

/// Sum of singular values of a dense matrix.
double dense_nuclear_norm(const DenseMatrix& x);

/// Shrinks every singular value of x by `threshold`, clamping at zero.
DenseMatrix soft_threshold_singular_values(const DenseMatrix& x, double threshold);

/// alpha ||mask .* (X - Z)||_F^2 + beta ||X||_*. `mask` has 0/1 entries.
double dense_completion_objective(const DenseMatrix& x, const DenseMatrix& z, const DenseMatrix& mask,
                                  double alpha, double beta_reg);

struct ProxReferenceOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 200000;
};

/// Fully observed problem.
DenseMatrix prox_reference_solver(const DenseMatrix& z, double alpha, double beta_reg, double tol);

/// Iterates until the relative objective change drops below the tolerance.
/// Throws NumericalFailure if the iteration budget runs out.
DenseMatrix prox_reference_solver(const DenseMatrix& z, const DenseMatrix& mask, double alpha,
                                  double beta_reg, const ProxReferenceOptions& options = {});

}  // namespace nnssgd
