#include "nnssgd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "nnssgd/errors.hpp"
#include "nnssgd/rng.hpp"

namespace nnssgd {
namespace {

using Index = Eigen::Index;

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const DenseMatrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
}

}  // namespace

CompactSVD CompactSVD::zero(std::size_t rows, std::size_t cols) {
  return CompactSVD{DenseMatrix(static_cast<Index>(rows), 0), DenseVector(0),
                    DenseMatrix(static_cast<Index>(cols), 0)};
}

double CompactSVD::entry(std::size_t i, std::size_t j) const {
  double value = 0.0;
  for (Index c = 0; c < sigma.size(); ++c) {
    value += U(static_cast<Index>(i), c) * sigma(c) * V(static_cast<Index>(j), c);
  }
  return value;
}

DenseVector CompactSVD::column(std::size_t j) const {
  if (sigma.size() == 0) return DenseVector::Zero(U.rows());
  const DenseVector weights = sigma.cwiseProduct(V.row(static_cast<Index>(j)).transpose());
  return U * weights;
}

DenseMatrix CompactSVD::dense() const {
  if (sigma.size() == 0) return DenseMatrix::Zero(U.rows(), V.rows());
  return U * sigma.asDiagonal() * V.transpose();
}

QRFactors economy_qr(const DenseMatrix& a) {
  require_finite(a, "qr");
  const Index m = a.rows();
  const Index p = a.cols();
  const Index steps = std::min(m, p);

  DenseMatrix work = a;
  std::vector<double> tau(static_cast<std::size_t>(steps), 0.0);

  // Reflector j is H = I - tau v v^T with v(0) = 1 and v(1:) stored below the
  // diagonal of column j (LAPACK dgeqr2 layout).
  for (Index j = 0; j < steps; ++j) {
    auto x = work.col(j).segment(j, m - j);
    const double x0 = x(0);
    const double tail_sq = m - j > 1 ? x.tail(m - j - 1).squaredNorm() : 0.0;
    if (tail_sq == 0.0) continue;  // already upper triangular in this column
    const double norm = std::sqrt(x0 * x0 + tail_sq);
    const double beta = x0 >= 0.0 ? -norm : norm;
    tau[static_cast<std::size_t>(j)] = (beta - x0) / beta;
    x.tail(m - j - 1) /= (x0 - beta);
    x(0) = beta;

    if (j + 1 < p) {
      auto trailing = work.block(j, j + 1, m - j, p - j - 1);
      Eigen::RowVectorXd w = trailing.row(0);
      w.noalias() += x.tail(m - j - 1).transpose() * trailing.bottomRows(m - j - 1);
      const double t = tau[static_cast<std::size_t>(j)];
      trailing.row(0) -= t * w;
      trailing.bottomRows(m - j - 1).noalias() -= (t * x.tail(m - j - 1)) * w;
    }
  }

  QRFactors out;
  out.R = work.topRows(steps).triangularView<Eigen::Upper>();

  // Backward accumulation of the first `steps` columns of H_0 ... H_{steps-1}.
  out.Q = DenseMatrix::Identity(m, steps);
  for (Index j = steps - 1; j >= 0; --j) {
    const double t = tau[static_cast<std::size_t>(j)];
    if (t == 0.0) continue;
    auto block = out.Q.block(j, j, m - j, steps - j);
    const auto v_tail = work.col(j).segment(j + 1, m - j - 1);
    Eigen::RowVectorXd w = block.row(0);
    w.noalias() += v_tail.transpose() * block.bottomRows(m - j - 1);
    block.row(0) -= t * w;
    block.bottomRows(m - j - 1).noalias() -= (t * v_tail) * w;
  }

  for (Index j = 0; j < steps; ++j) {
    if (out.R(j, j) < 0.0) {
      out.R.row(j) *= -1.0;
      out.Q.col(j) *= -1.0;
    }
  }
  return out;
}

QRFactors reduced_qr(const DenseMatrix& a) {
  if (a.cols() < 1 || a.rows() < a.cols()) {
    throw InvalidArgument("reduced_qr: need rows >= cols >= 1, got " + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()));
  }
  return economy_qr(a);
}

namespace {

// Orthonormal completion of the columns of q flagged in `missing`, using
// standard basis candidates and two rounds of Gram-Schmidt.
void complete_basis(DenseMatrix& q, const std::vector<bool>& missing) {
  const Index m = q.rows();
  std::vector<Index> filled;
  for (Index c = 0; c < q.cols(); ++c) {
    if (!missing[static_cast<std::size_t>(c)]) filled.push_back(c);
  }
  Index candidate = 0;
  for (Index c = 0; c < q.cols(); ++c) {
    if (!missing[static_cast<std::size_t>(c)]) continue;
    for (; candidate < m; ++candidate) {
      DenseVector v = DenseVector::Unit(m, candidate);
      for (int pass = 0; pass < 2; ++pass) {
        for (Index f : filled) v -= q.col(f).dot(v) * q.col(f);
      }
      const double norm = v.norm();
      if (norm > 0.5) {
        q.col(c) = v / norm;
        filled.push_back(c);
        ++candidate;
        break;
      }
    }
  }
}

// One-sided Jacobi on a tall matrix (rows >= cols). Returns U (rows x cols),
// s, V (cols x cols), sorted by decreasing s.
SVDFactors jacobi_tall(const DenseMatrix& a) {
  const Index m = a.rows();
  const Index n = a.cols();
  DenseMatrix w = a;
  DenseMatrix v = DenseMatrix::Identity(n, n);
  const double tol = kEps * static_cast<double>(std::max<Index>(m, 1));
  // Columns below this norm are rounding noise. Rotating them against large
  // columns can cycle without reducing the off-diagonal mass.
  const double noise_sq = std::pow(kEps * a.norm(), 2);
  constexpr int kMaxSweeps = 80;

  bool converged = n < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i < n - 1; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double alpha = w.col(i).squaredNorm();
        const double beta = w.col(j).squaredNorm();
        const double gamma = w.col(i).dot(w.col(j));
        if (gamma == 0.0 || alpha <= noise_sq || beta <= noise_sq) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index r = 0; r < m; ++r) {
          const double wi = w(r, i);
          const double wj = w(r, j);
          w(r, i) = c * wi - s * wj;
          w(r, j) = s * wi + c * wj;
        }
        for (Index r = 0; r < n; ++r) {
          const double vi = v(r, i);
          const double vj = v(r, j);
          v(r, i) = c * vi - s * vj;
          v(r, j) = s * vi + c * vj;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalFailure("small_svd: one-sided Jacobi did not converge in " +
                           std::to_string(kMaxSweeps) + " sweeps");
  }

  DenseVector norms(n);
  for (Index c = 0; c < n; ++c) norms(c) = w.col(c).norm();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return norms(x) > norms(y); });

  SVDFactors out{DenseMatrix(m, n), DenseVector(n), DenseMatrix(n, n)};
  const double smax = n > 0 ? norms(order.front()) : 0.0;
  const double null_level = smax * kEps * static_cast<double>(std::max<Index>(m, 1));
  std::vector<bool> missing(static_cast<std::size_t>(n), false);
  for (Index c = 0; c < n; ++c) {
    const Index src = order[static_cast<std::size_t>(c)];
    out.s(c) = norms(src);
    out.N.col(c) = v.col(src);
    if (norms(src) > null_level && norms(src) > 0.0) {
      out.M.col(c) = w.col(src) / norms(src);
    } else {
      missing[static_cast<std::size_t>(c)] = true;
    }
  }
  complete_basis(out.M, missing);
  return out;
}

}  // namespace

SVDFactors small_svd(const DenseMatrix& t) {
  require_finite(t, "small_svd");
  if (t.rows() >= t.cols()) return jacobi_tall(t);
  SVDFactors flipped = jacobi_tall(t.transpose());
  return SVDFactors{std::move(flipped.N), std::move(flipped.s), std::move(flipped.M)};
}

double negligible_threshold(std::size_t rows, std::size_t cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * kEps * sigma_max;
}

CompactSVD truncate_svd(const CompactSVD& x, std::size_t t) {
  const Index keep = static_cast<Index>(std::min(t, x.rank()));
  if (keep == static_cast<Index>(x.rank())) return x;
  return CompactSVD{x.U.leftCols(keep), x.sigma.head(keep), x.V.leftCols(keep)};
}

CompactSVD drop_negligible(const CompactSVD& x) {
  if (x.rank() == 0) return x;
  const double threshold = negligible_threshold(x.rows(), x.cols(), x.sigma(0));
  std::size_t keep = 0;
  while (keep < x.rank() && x.sigma(static_cast<Index>(keep)) > threshold) ++keep;
  return truncate_svd(x, keep);
}

double orthonormality_error(const DenseMatrix& a) {
  if (a.cols() == 0) return 0.0;
  const DenseMatrix gram = a.transpose() * a;
  return (gram - DenseMatrix::Identity(a.cols(), a.cols())).cwiseAbs().maxCoeff();
}

CompactSVD tsvd_sparse(const SparseObservations& z, std::size_t t, const TsvdOptions& options) {
  const std::size_t m = z.rows();
  const std::size_t n = z.cols();
  if (t < 1 || t > std::min(m, n)) {
    throw InvalidArgument("tsvd_sparse: rank " + std::to_string(t) + " outside [1, " +
                          std::to_string(std::min(m, n)) + "]");
  }
  if (z.frobenius_norm_sq() == 0.0) return CompactSVD::zero(m, n);

  const Index width = static_cast<Index>(std::min(t + options.oversampling, std::min(m, n)));
  const Index wanted = static_cast<Index>(t);

  Rng rng(options.seed);
  DenseMatrix sketch(static_cast<Index>(n), width);
  for (Index c = 0; c < width; ++c) {
    for (Index r = 0; r < sketch.rows(); ++r) sketch(r, c) = rng.normal();
  }
  DenseMatrix right = economy_qr(sketch).Q;  // n x width
  DenseMatrix left;                           // m x width
  SVDFactors core;
  double residual = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0;; ++iter) {
    const DenseMatrix image = z.multiply(right);  // Z P
    if (iter > options.min_power_iterations) {
      // Residual of the previous Ritz pairs: Z v_i - s_i u_i with
      // v = P N and u = Q M.
      residual = 0.0;
      const double s1 = core.s(0);
      if (s1 == 0.0) return CompactSVD::zero(m, n);
      for (Index i = 0; i < wanted; ++i) {
        const DenseVector diff = image * core.N.col(i) - core.s(i) * (left * core.M.col(i));
        residual = std::max(residual, diff.norm() / s1);
      }
      if (residual <= options.tolerance) break;
    }
    if (iter >= options.max_power_iterations) {
      throw NumericalFailure("tsvd_sparse: subspace iteration stalled after " +
                             std::to_string(iter) + " power iterations (residual " +
                             std::to_string(residual) + ", tolerance " +
                             std::to_string(options.tolerance) + ")");
    }
    left = economy_qr(image).Q;
    QRFactors back = economy_qr(z.multiply_transpose(left));  // Z^T Q = P R
    right = std::move(back.Q);
    // Z ~ Q Q^T Z = Q R^T P^T.
    core = small_svd(back.R.transpose());
  }

  CompactSVD out{left * core.M.leftCols(wanted), core.s.head(wanted),
                 right * core.N.leftCols(wanted)};
  return drop_negligible(out);
}

}  // namespace nnssgd
