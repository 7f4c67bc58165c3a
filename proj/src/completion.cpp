#include "nnssgd/completion.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include "nnssgd/errors.hpp"
#include "nnssgd/rng.hpp"

namespace nnssgd {

using Index = Eigen::Index;

namespace {

// f(X0) below this (alpha-normalized, i.e. relative squared residual) means
// the warm start already fits the data and beta would vanish.
constexpr double kDegenerateFit = 1e-12;

double residual_rmse(const CompactSVD& x, const SparseObservations& data) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : data.entries()) {
    const double d = x.entry(e.row, e.col) - e.value;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(data.nnz()));
}

}  // namespace

void CompletionConfig::validate(std::size_t cols) const {
  if (rank < 1) throw InvalidArgument("rank must be at least 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("nu must be positive");
  const std::size_t width = probe_width();
  if (width < 1 || width > cols) {
    throw InvalidArgument("probe width k=" + std::to_string(width) + " must lie in [1, " +
                          std::to_string(cols) + "]");
  }
  if (metrics_every < 1) throw InvalidArgument("metrics cadence must be at least 1");
  if (beta_override && (*beta_override < 0.0 || !std::isfinite(*beta_override))) {
    throw InvalidArgument("beta override must be finite and non-negative");
  }
  if (radius_override && !(*radius_override > 0.0)) {
    throw InvalidArgument("radius override must be positive");
  }
}

Centering Centering::zeros(std::size_t rows, std::size_t cols) {
  return Centering{DenseVector::Zero(static_cast<Index>(rows)),
                   DenseVector::Zero(static_cast<Index>(cols)), 0.0};
}

double Centering::offset(std::size_t i, std::size_t j) const {
  return 0.5 * (row_means(static_cast<Index>(i)) + col_means(static_cast<Index>(j)));
}

CenteredData preprocess_center(const SparseObservations& train, const SparseObservations* test) {
  if (train.empty()) throw InvalidArgument("preprocess_center: empty training set");
  if (test && (test->rows() != train.rows() || test->cols() != train.cols())) {
    throw InvalidArgument("preprocess_center: train and test grids differ");
  }
  const Index m = static_cast<Index>(train.rows());
  const Index n = static_cast<Index>(train.cols());
  DenseVector row_sum = DenseVector::Zero(m), col_sum = DenseVector::Zero(n);
  Eigen::VectorXi row_count = Eigen::VectorXi::Zero(m), col_count = Eigen::VectorXi::Zero(n);
  double total = 0.0;
  for (const auto& e : train.entries()) {
    row_sum(static_cast<Index>(e.row)) += e.value;
    col_sum(static_cast<Index>(e.col)) += e.value;
    ++row_count(static_cast<Index>(e.row));
    ++col_count(static_cast<Index>(e.col));
    total += e.value;
  }
  Centering means;
  means.global_mean = total / static_cast<double>(train.nnz());
  means.row_means.resize(m);
  means.col_means.resize(n);
  for (Index i = 0; i < m; ++i) {
    means.row_means(i) = row_count(i) > 0 ? row_sum(i) / row_count(i) : means.global_mean;
  }
  for (Index j = 0; j < n; ++j) {
    means.col_means(j) = col_count(j) > 0 ? col_sum(j) / col_count(j) : means.global_mean;
  }

  auto center = [&](const SparseObservations& data) {
    std::vector<Observation> shifted(data.entries().begin(), data.entries().end());
    for (auto& e : shifted) e.value -= means.offset(e.row, e.col);
    return SparseObservations(data.rows(), data.cols(), std::move(shifted));
  };

  CenteredData out{center(train), std::nullopt, means};
  if (test) out.test = center(*test);
  return out;
}

std::pair<DerivedParams, CompactSVD> init_params(const SparseObservations& z,
                                                 const CompletionConfig& config) {
  if (z.empty()) throw InvalidArgument("init_params: empty observation set");
  const double z_norm_sq = z.frobenius_norm_sq();
  if (z_norm_sq == 0.0) {
    throw InvalidArgument("init_params: all observations are zero, warm start is the zero matrix");
  }
  const std::size_t r = std::min(config.rank, std::min(z.rows(), z.cols()));
  CompactSVD x0 = tsvd_sparse(z, r, config.tsvd);

  DerivedParams params;
  params.alpha = 1.0 / z_norm_sq;
  params.eta = config.nu * z_norm_sq;

  const double nuclear = x0.nuclear_norm();
  if (config.beta_override) {
    params.beta_reg = *config.beta_override;
  } else {
    if (nuclear == 0.0) {
      throw InvalidArgument("init_params: warm start has zero nuclear norm; beta is undefined");
    }
    // f here is the unweighted loss, so that beta ||X0||_* = delta * alpha f(X0).
    const SumLoss loss(config.loss, 1.0, z, config.masked_residuals);
    const double fit = loss.total_value(x0);
    if (params.alpha * fit <= kDegenerateFit) {
      throw InvalidArgument("init_params: the rank-" + std::to_string(r) +
                            " warm start already fits the data (alpha f(X0) = " +
                            std::to_string(params.alpha * fit) +
                            "), so the regularization weight would vanish");
    }
    params.beta_reg = config.delta * fit / (z_norm_sq * nuclear);
  }

  if (config.radius_override) {
    params.radius = *config.radius_override;
  } else if (params.beta_reg > 0.0) {
    // ||X_opt||_F <= ||X_opt||_* <= F(0) / beta = alpha ||Z||_F^2 / beta.
    params.radius = params.alpha * z_norm_sq / params.beta_reg;
  } else {
    params.radius = std::numeric_limits<double>::infinity();
  }
  return {params, std::move(x0)};
}

std::size_t super_iteration_length(std::size_t cols, std::size_t rank) {
  return (cols + rank - 1) / rank;
}

CompletionModel train(const SparseObservations& train_data, const CompletionConfig& config,
                      const MetricsSink& sink, const SparseObservations* test_data,
                      const Centering* centering) {
  if (train_data.empty()) throw InvalidArgument("train: empty training set");
  config.validate(train_data.cols());
  if (test_data && (test_data->rows() != train_data.rows() || test_data->cols() != train_data.cols())) {
    throw InvalidArgument("train: train and test grids differ");
  }
  const auto start = std::chrono::steady_clock::now();

  auto [params, x] = init_params(train_data, config);
  const SumLoss loss(config.loss, params.alpha, train_data, config.masked_residuals);
  const std::size_t n = train_data.cols();
  const std::size_t k = config.probe_width();
  const std::size_t block = super_iteration_length(n, config.rank);
  Rng rng(config.seed);

  CompactSVD best = x;
  double best_objective = std::numeric_limits<double>::infinity();

  auto checkpoint = [&](std::size_t super_iter, std::size_t iteration) {
    MetricsRecord record;
    record.super_iteration = super_iter;
    record.iteration = iteration;
    record.objective = objective(x, loss, params.beta_reg);
    record.train_rmse = residual_rmse(x, train_data);
    if (test_data && !test_data->empty()) record.test_rmse = residual_rmse(x, *test_data);
    record.rank = x.rank();
    if (record.objective < best_objective) {
      best_objective = record.objective;
      best = x;
    }
    if (config.record_wall_time) {
      record.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    if (!sink) return;
    try {
      sink(record);
    } catch (const std::exception& err) {
      std::cerr << "warning: metrics sink failed at super-iteration " << super_iter << ": "
                << err.what() << '\n';
    }
  };

  checkpoint(0, 0);
  std::size_t iteration = 0;
  for (std::size_t super_iter = 1; super_iter <= config.super_iterations; ++super_iter) {
    for (std::size_t t = 0; t < block; ++t, ++iteration) {
      const ProbeMatrix y = sample_probe(config.probe, n, k, rng, config.draw);
      const DenseMatrix s = subgradient_probe(x, loss, params.beta_reg, y, config.threads);
      x = incremental_update(x, s, y, params.eta, config.rank, params.radius, config.scaling);
    }
    if (super_iter % config.metrics_every == 0 || super_iter == config.super_iterations) {
      checkpoint(super_iter, iteration);
    }
  }

  CompletionModel model;
  model.factors = config.return_best ? std::move(best) : std::move(x);
  model.means = centering ? *centering : Centering::zeros(train_data.rows(), train_data.cols());
  if (static_cast<std::size_t>(model.means.row_means.size()) != train_data.rows() ||
      static_cast<std::size_t>(model.means.col_means.size()) != train_data.cols()) {
    throw InvalidArgument("train: centering does not match the training grid");
  }
  return model;
}

CompletionModel fit(const SparseObservations& train_raw, const SparseObservations* test_raw,
                    const CompletionConfig& config, const MetricsSink& sink, bool center) {
  if (!center) return train(train_raw, config, sink, test_raw, nullptr);
  const CenteredData data = preprocess_center(train_raw, test_raw);
  return train(data.train, config, sink, data.test ? &*data.test : nullptr, &data.means);
}

double predict(const CompletionModel& model, std::size_t i, std::size_t j) {
  if (i >= model.rows() || j >= model.cols()) {
    throw InvalidArgument("predict: index (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") outside a " + std::to_string(model.rows()) + "x" +
                          std::to_string(model.cols()) + " model");
  }
  return model.factors.entry(i, j) + model.means.offset(i, j);
}

double rmse(const CompletionModel& model, const SparseObservations& test) {
  if (test.empty()) throw InvalidArgument("rmse: empty test set");
  double sum = 0.0;
  for (const auto& e : test.entries()) {
    const double d = predict(model, e.row, e.col) - e.value;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(test.nnz()));
}

}  // namespace nnssgd
