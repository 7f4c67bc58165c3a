#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "nnssgd/linalg.hpp"
#include "nnssgd/loss.hpp"
#include "nnssgd/observations.hpp"
#include "nnssgd/probing.hpp"
#include "nnssgd/ssgd.hpp"

namespace nnssgd {

struct CompletionConfig {
  std::size_t rank = 11;
  std::size_t super_iterations = 10;
  /// Normalized regularization: beta ||X0||_* = delta * alpha f(X0).
  double delta = 0.015;
  /// Normalized step size: eta = nu ||Z||_F^2.
  double nu = 0.005;
  /// Probe width; defaults to rank.
  std::optional<std::size_t> k;
  ProbeKind probe = ProbeKind::column_sampling;
  ColumnDraw draw = ColumnDraw::without_replacement;
  LossKind loss = LossKind::squared;
  std::uint64_t seed = 1;
  bool masked_residuals = true;
  ProbeScaling scaling = ProbeScaling::consistent;
  /// Return the checkpoint with the lowest objective instead of the final
  /// iterate.
  bool return_best = false;
  /// Emit metrics every this many super-iterations.
  std::size_t metrics_every = 1;
  /// Report elapsed wall time in metrics; zero when false.
  bool record_wall_time = true;
  std::size_t threads = 1;
  /// Bypass the beta / Delta heuristics.
  std::optional<double> beta_override;
  std::optional<double> radius_override;
  TsvdOptions tsvd;

  std::size_t probe_width() const { return k.value_or(rank); }

  /// Throws InvalidArgument when a field is out of range for an n-column problem.
  void validate(std::size_t cols) const;
};

struct DerivedParams {
  double alpha = 0.0;
  double beta_reg = 0.0;
  double radius = 0.0;  // Delta
  double eta = 0.0;
};

// Row / column means of the training ratings. Rows or columns without
// training entries fall back to the global mean.
struct Centering {
  DenseVector row_means;
  DenseVector col_means;
  double global_mean = 0.0;

  static Centering zeros(std::size_t rows, std::size_t cols);

  /// (mu_i + mu_hat_j) / 2.
  double offset(std::size_t i, std::size_t j) const;
};

struct CenteredData {
  SparseObservations train;
  std::optional<SparseObservations> test;
  Centering means;
};

/// Subtracts (mu_i + mu_hat_j) / 2, computed from the training set, from
/// every training and test value. Throws InvalidArgument on empty training
/// data or mismatched grids.
CenteredData preprocess_center(const SparseObservations& train,
                               const SparseObservations* test = nullptr);

/// Warm start X0 = TSVD(Z, r) and the derived alpha, beta, Delta, eta.
/// Throws InvalidArgument when the warm start is degenerate (||X0||_* = 0 or
/// f(X0) = 0), where the beta heuristic is undefined.
std::pair<DerivedParams, CompactSVD> init_params(const SparseObservations& z,
                                                 const CompletionConfig& config);

struct CompletionModel {
  CompactSVD factors;
  Centering means;

  std::size_t rows() const noexcept { return factors.rows(); }
  std::size_t cols() const noexcept { return factors.cols(); }
};

struct MetricsRecord {
  std::size_t super_iteration = 0;
  std::size_t iteration = 0;
  double wall_seconds = 0.0;
  double objective = 0.0;
  double train_rmse = 0.0;
  std::optional<double> test_rmse;
  std::size_t rank = 0;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

/// Runs s * ceil(n / r) SSGD iterations from the warm start on already
/// prepared (typically centered) training data. `centering` is stored in the
/// model; RMSE values in the metrics are on the raw scale, which equals the
/// centered scale residual. Sink exceptions are reported on stderr and do
/// not stop training.
CompletionModel train(const SparseObservations& train_data, const CompletionConfig& config,
                      const MetricsSink& sink = {}, const SparseObservations* test_data = nullptr,
                      const Centering* centering = nullptr);

/// Centers raw ratings (optionally) and trains.
CompletionModel fit(const SparseObservations& train_raw, const SparseObservations* test_raw,
                    const CompletionConfig& config, const MetricsSink& sink = {},
                    bool center = true);

/// Entry (i, j) on the raw scale in O(r). Zero-based indices.
double predict(const CompletionModel& model, std::size_t i, std::size_t j);

/// Root-mean-square error of the model over raw-scale observations.
double rmse(const CompletionModel& model, const SparseObservations& test);

/// Number of iterations in one super-iteration: ceil(n / r).
std::size_t super_iteration_length(std::size_t cols, std::size_t rank);

}  // namespace nnssgd
