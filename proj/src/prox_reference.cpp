#include "nnssgd/prox_reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "nnssgd/errors.hpp"

namespace nnssgd {

double dense_nuclear_norm(const DenseMatrix& x) {
  if (x.size() == 0) return 0.0;
  return Eigen::BDCSVD<DenseMatrix>(x).singularValues().sum();
}

DenseMatrix soft_threshold_singular_values(const DenseMatrix& x, double threshold) {
  Eigen::BDCSVD<DenseMatrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const DenseVector shrunk = (svd.singularValues().array() - threshold).max(0.0).matrix();
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

double dense_completion_objective(const DenseMatrix& x, const DenseMatrix& z, const DenseMatrix& mask,
                                  double alpha, double beta_reg) {
  const double fit = (mask.array() * (x - z).array()).matrix().squaredNorm();
  return alpha * fit + beta_reg * dense_nuclear_norm(x);
}

DenseMatrix prox_reference_solver(const DenseMatrix& z, double alpha, double beta_reg, double tol) {
  const DenseMatrix mask = DenseMatrix::Ones(z.rows(), z.cols());
  return prox_reference_solver(z, mask, alpha, beta_reg, ProxReferenceOptions{tol, 200000});
}

DenseMatrix prox_reference_solver(const DenseMatrix& z, const DenseMatrix& mask, double alpha,
                                  double beta_reg, const ProxReferenceOptions& options) {
  if (z.rows() != mask.rows() || z.cols() != mask.cols()) {
    throw InvalidArgument("prox_reference_solver: mask shape mismatch");
  }
  if (!(alpha > 0.0) || beta_reg < 0.0) {
    throw InvalidArgument("prox_reference_solver: need alpha > 0 and beta_reg >= 0");
  }
  // Gradient 2 alpha mask .* (X - Z) is Lipschitz with constant 2 alpha; the
  // step 1 / (2 alpha) turns each iteration into a soft-impute update.
  const double step = 1.0 / (2.0 * alpha);
  DenseMatrix x = DenseMatrix::Zero(z.rows(), z.cols());
  double previous = dense_completion_objective(x, z, mask, alpha, beta_reg);
  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    const DenseMatrix gradient = 2.0 * alpha * (mask.array() * (x - z).array()).matrix();
    x = soft_threshold_singular_values(x - step * gradient, step * beta_reg);
    const double current = dense_completion_objective(x, z, mask, alpha, beta_reg);
    const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
    if (iter > 1 && std::abs(previous - current) <= options.tolerance * scale) return x;
    previous = current;
  }
  throw NumericalFailure("prox_reference_solver: no convergence in " +
                         std::to_string(options.max_iterations) + " iterations");
}

}  // namespace nnssgd
