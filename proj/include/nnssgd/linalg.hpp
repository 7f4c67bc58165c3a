#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "nnssgd/observations.hpp"

namespace nnssgd {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

/// X = U * diag(sigma) * V^T with orthonormal U (m x p), V (n x p) and a
/// strictly positive, non-increasing sigma. p = 0 represents the zero matrix.
struct CompactSVD {
  DenseMatrix U;
  DenseVector sigma;
  DenseMatrix V;

  static CompactSVD zero(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(U.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(V.rows()); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(sigma.size()); }

  double frobenius_norm() const { return sigma.norm(); }
  double nuclear_norm() const { return sigma.sum(); }

  /// X_ij in O(p).
  double entry(std::size_t i, std::size_t j) const;

  /// Column j of X in O(m p).
  DenseVector column(std::size_t j) const;

  DenseMatrix dense() const;
};

struct QRFactors {
  DenseMatrix Q;  // m x p, orthonormal columns
  DenseMatrix R;  // p x p, upper triangular, non-negative diagonal
};

/// Householder reduced QR of a tall-skinny matrix (rows >= cols >= 1).
QRFactors reduced_qr(const DenseMatrix& a);

/// Householder QR that also accepts wide input: Q is m x min(m, p) and R is
/// min(m, p) x p upper trapezoidal. Zero-column input yields empty factors.
QRFactors economy_qr(const DenseMatrix& a);

struct SVDFactors {
  DenseMatrix M;  // p x min(p, q)
  DenseVector s;  // min(p, q), non-negative and non-increasing
  DenseMatrix N;  // q x min(p, q)
};

/// SVD of a small dense matrix by one-sided (Hestenes) Jacobi rotations.
/// Intended for the (rank + probe width)-sized core of the incremental update.
SVDFactors small_svd(const DenseMatrix& t);

struct TsvdOptions {
  std::size_t oversampling = 10;
  std::size_t min_power_iterations = 4;
  std::size_t max_power_iterations = 1000;
  double tolerance = 1e-8;
  std::uint64_t seed = 0x5eed;
};

/// Best rank-<=t approximation of a sparse matrix by randomized subspace
/// iteration. Iterates until max_i ||Z v_i - s_i u_i|| <= tolerance * s_1
/// over the leading t Ritz pairs.
CompactSVD tsvd_sparse(const SparseObservations& z, std::size_t t, const TsvdOptions& options = {});

/// Keeps the leading min(t, p) triplets.
CompactSVD truncate_svd(const CompactSVD& x, std::size_t t);

/// Threshold below which a singular value counts as zero:
/// max(m, n) * eps * sigma_1.
double negligible_threshold(std::size_t rows, std::size_t cols, double sigma_max);

/// Drops trailing singular values at or below negligible_threshold.
CompactSVD drop_negligible(const CompactSVD& x);

/// max |A^T A - I|.
double orthonormality_error(const DenseMatrix& a);

}  // namespace nnssgd
