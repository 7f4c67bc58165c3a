#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "nnssgd/linalg.hpp"
#include "nnssgd/loss.hpp"
#include "nnssgd/probing.hpp"
#include "nnssgd/rng.hpp"

namespace nnssgd {

/// Scaling of the V-hat probe block in the incremental update.
///
/// `consistent`: the block is -eta * Y with Y carrying sqrt(n/k), so the
/// densified step S Y^T equals G Y Y^T and is unbiased for G.
/// `printed`: for column sampling the block uses unscaled e_{c_i}, so the
/// step carries sqrt(n/k) once. Dense probes are unaffected.
enum class ProbeScaling { consistent, printed };

/// Scales sigma onto the Frobenius ball of radius delta; U and V untouched.
CompactSVD project_K(const CompactSVD& x, double delta);

struct FactorPair {
  DenseMatrix left;
  DenseMatrix right;

  DenseMatrix dense() const { return left * right.transpose(); }
};

/// U V^T of a compact SVD, the nuclear-norm subgradient, in factored form.
FactorPair nuclear_subgradient_term(const CompactSVD& x);

/// S = (grad f(X) + lambda U V^T) Y. For column sampling only the sampled
/// columns are evaluated. `threads` > 1 splits the per-column work; each
/// column is written to its own slot so the result does not depend on it.
DenseMatrix subgradient_probe(const CompactSVD& x, const LossModel& loss, double lambda,
                              const ProbeMatrix& y, std::size_t threads = 1);

/// Compact SVD of project_K(truncate(X - eta S Y^T, rank_cap), delta),
/// computed from QR factorizations of the (m x (p+k)) and (n x (p+k)) stacked
/// factors. No m x n matrix is formed.
CompactSVD incremental_update(const CompactSVD& x, const DenseMatrix& s, const ProbeMatrix& y,
                              double eta, std::size_t rank_cap, double delta,
                              ProbeScaling scaling = ProbeScaling::consistent);

/// F(X) = f(X) + lambda * ||X||_*.
double objective(const CompactSVD& x, const LossModel& loss, double lambda);

/// eta = beta sqrt(k) delta / (sqrt(n) (G + lambda sqrt(r)) sqrt(T)).
/// lambda may be zero; every other input must be positive.
double theorem_step_size(std::size_t k, double delta, std::size_t n, double gradient_bound,
                         double lambda, std::size_t r, std::size_t iterations, double beta = 1.0);

using StepSchedule = std::function<double(std::size_t)>;

inline StepSchedule constant_step(double eta) {
  return [eta](std::size_t) { return eta; };
}

struct BasicSsgdOptions {
  double lambda = 0.0;
  std::size_t iterations = 0;
  StepSchedule step_size = constant_step(0.0);
  std::size_t k = 1;
  ProbeKind probe = ProbeKind::column_sampling;
  ColumnDraw draw = ColumnDraw::without_replacement;
  /// Unset runs plain projected SSGD (cap = min(m, n)).
  std::optional<std::size_t> rank_cap;
  double delta = 1.0;
  /// Evaluate F every this many iterations; the best iterate is chosen
  /// among evaluated ones (the start and the final iterate are always
  /// evaluated).
  std::size_t eval_every = 1;
  ProbeScaling scaling = ProbeScaling::consistent;
  std::size_t threads = 1;
  /// Called with (t, X^(t)) for every iterate after the start.
  std::function<void(std::size_t, const CompactSVD&)> on_iterate;
};

struct SsgdResult {
  CompactSVD best;
  double best_objective = 0.0;
  std::size_t best_iteration = 0;
  CompactSVD last;
};

/// Projected stochastic subgradient descent from X = 0, returning the
/// evaluated iterate with the smallest objective.
SsgdResult basic_ssgd(const LossModel& loss, const BasicSsgdOptions& options, Rng& rng);

}  // namespace nnssgd
