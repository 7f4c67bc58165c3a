#pragma once

// Shared generators and dense oracles for the test suites. Oracles use
// Eigen's own decompositions so they stay independent of the solver kernels.

#include <cstddef>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nnssgd/linalg.hpp"
#include "nnssgd/observations.hpp"
#include "nnssgd/rng.hpp"

namespace nnssgd::testing {

inline DenseMatrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  DenseMatrix a(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) a(r, c) = rng.normal();
  }
  return a;
}

inline DenseMatrix random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::HouseholderQR<DenseMatrix> qr(random_matrix(rng, rows, cols));
  return qr.householderQ() * DenseMatrix::Identity(rows, cols);
}

/// Random compact SVD with well-separated positive singular values.
inline CompactSVD random_compact(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
                                 double scale = 1.0) {
  DenseVector sigma(rank);
  double value = scale * (1.0 + rng.uniform());
  for (Eigen::Index c = 0; c < rank; ++c) {
    sigma(c) = value;
    value *= 0.4 + 0.5 * rng.uniform();
  }
  return CompactSVD{random_orthonormal(rng, rows, rank), sigma, random_orthonormal(rng, cols, rank)};
}

inline DenseVector oracle_singular_values(const DenseMatrix& a) {
  return Eigen::JacobiSVD<DenseMatrix>(a).singularValues();
}

inline double relative_frobenius(const DenseMatrix& a, const DenseMatrix& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

/// Dense form of: SVD, keep `cap` leading triplets, drop negligible ones,
/// then scale onto the Frobenius ball of radius delta.
inline DenseMatrix oracle_truncate_project(const DenseMatrix& a, std::size_t cap, double delta) {
  Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const DenseVector s = svd.singularValues();
  Eigen::Index keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(cap), s.size());
  DenseMatrix out = svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() *
                    svd.matrixV().leftCols(keep).transpose();
  const double norm = s.head(keep).norm();
  if (norm > delta) out *= delta / norm;
  return out;
}

inline SparseObservations dense_to_observations(const DenseMatrix& z) {
  std::vector<Observation> entries;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), z(i, j)});
    }
  }
  return SparseObservations(static_cast<std::size_t>(z.rows()), static_cast<std::size_t>(z.cols()),
                            std::move(entries));
}

inline SparseObservations random_sparse(Rng& rng, std::size_t rows, std::size_t cols, double density) {
  std::vector<Observation> entries;
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      if (rng.uniform() < density) entries.push_back({i, j, rng.normal()});
    }
  }
  return SparseObservations(rows, cols, std::move(entries));
}

/// True when sigma is positive and non-increasing.
inline bool sigma_well_formed(const DenseVector& sigma) {
  for (Eigen::Index c = 0; c < sigma.size(); ++c) {
    if (!(sigma(c) > 0.0)) return false;
    if (c > 0 && sigma(c) > sigma(c - 1)) return false;
  }
  return true;
}

}  // namespace nnssgd::testing
