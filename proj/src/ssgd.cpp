#include "nnssgd/ssgd.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "nnssgd/errors.hpp"

namespace nnssgd {

using Index = Eigen::Index;

CompactSVD project_K(const CompactSVD& x, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("project_K: delta must be positive");
  const double norm = x.frobenius_norm();
  if (norm <= delta) return x;
  CompactSVD out = x;
  out.sigma *= delta / norm;
  return out;
}

FactorPair nuclear_subgradient_term(const CompactSVD& x) { return FactorPair{x.U, x.V}; }

namespace {

template <typename Fn>
void for_each_column(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, count == 0 ? 1 : count);
  if (threads == 1) {
    for (std::size_t c = 0; c < count; ++c) fn(c);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t c = w; c < count; c += threads) fn(c);
    });
  }
}

}  // namespace

DenseMatrix subgradient_probe(const CompactSVD& x, const LossModel& loss, double lambda,
                              const ProbeMatrix& y, std::size_t threads) {
  if (lambda < 0.0) throw InvalidArgument("subgradient_probe: lambda must be non-negative");
  if (y.n != x.cols() || loss.cols() != x.cols() || loss.rows() != x.rows()) {
    throw InvalidArgument("subgradient_probe: dimension mismatch");
  }
  const Index m = static_cast<Index>(x.rows());
  DenseMatrix s = DenseMatrix::Zero(m, static_cast<Index>(y.k));

  if (y.kind == ProbeKind::column_sampling) {
    for_each_column(y.k, threads, [&](std::size_t c) {
      const std::size_t j = y.indices[c];
      auto out = s.col(static_cast<Index>(c));
      loss.add_gradient_column(x, j, y.scale, out);
      if (lambda != 0.0 && x.rank() > 0) {
        out.noalias() += (lambda * y.scale) * (x.U * x.V.row(static_cast<Index>(j)).transpose());
      }
    });
    return s;
  }

  // Dense probes: grad f(X) Y accumulated column by column in a fixed order.
  DenseVector column(m);
  for (std::size_t j = 0; j < y.n; ++j) {
    column.setZero();
    loss.add_gradient_column(x, j, 1.0, column);
    s.noalias() += column * y.dense.row(static_cast<Index>(j));
  }
  if (lambda != 0.0 && x.rank() > 0) s.noalias() += lambda * (x.U * (x.V.transpose() * y.dense));
  return s;
}

CompactSVD incremental_update(const CompactSVD& x, const DenseMatrix& s, const ProbeMatrix& y,
                              double eta, std::size_t rank_cap, double delta, ProbeScaling scaling) {
  const Index m = static_cast<Index>(x.rows());
  const Index n = static_cast<Index>(x.cols());
  const Index p = static_cast<Index>(x.rank());
  const Index k = static_cast<Index>(y.k);
  if (s.rows() != m || s.cols() != k || static_cast<Index>(y.n) != n) {
    throw InvalidArgument("incremental_update: dimension mismatch (X " + std::to_string(m) + "x" +
                          std::to_string(n) + ", S " + std::to_string(s.rows()) + "x" +
                          std::to_string(s.cols()) + ", probe " + std::to_string(y.n) + "x" +
                          std::to_string(y.k) + ")");
  }
  if (!(delta > 0.0)) throw InvalidArgument("incremental_update: delta must be positive");

  // U-hat = [U diag(sigma) | S],  V-hat = [V | -eta Y].
  DenseMatrix u_hat(m, p + k);
  u_hat.leftCols(p) = x.U * x.sigma.asDiagonal();
  u_hat.rightCols(k) = s;

  DenseMatrix v_hat = DenseMatrix::Zero(n, p + k);
  v_hat.leftCols(p) = x.V;
  if (y.kind == ProbeKind::column_sampling) {
    const double entry = scaling == ProbeScaling::consistent ? -eta * y.scale : -eta;
    for (Index c = 0; c < k; ++c) v_hat(static_cast<Index>(y.indices[static_cast<std::size_t>(c)]), p + c) = entry;
  } else {
    v_hat.rightCols(k) = -eta * y.dense;
  }

  const QRFactors qu = economy_qr(u_hat);
  const QRFactors qv = economy_qr(v_hat);
  const SVDFactors core = small_svd(qu.R * qv.R.transpose());

  Index keep = std::min<Index>(core.s.size(), static_cast<Index>(rank_cap));
  if (keep > 0) {
    const double threshold = negligible_threshold(x.rows(), x.cols(), core.s(0));
    Index nonzero = 0;
    while (nonzero < keep && core.s(nonzero) > threshold) ++nonzero;
    keep = nonzero;
  }
  if (!core.s.head(keep).allFinite()) {
    throw NumericalFailure("incremental_update: non-finite singular values");
  }

  CompactSVD next{qu.Q * core.M.leftCols(keep), core.s.head(keep), qv.Q * core.N.leftCols(keep)};
  return project_K(next, delta);
}

double objective(const CompactSVD& x, const LossModel& loss, double lambda) {
  return loss.total_value(x) + lambda * x.nuclear_norm();
}

double theorem_step_size(std::size_t k, double delta, std::size_t n, double gradient_bound,
                         double lambda, std::size_t r, std::size_t iterations, double beta) {
  if (k == 0 || n == 0 || r == 0 || iterations == 0 || !(delta > 0.0) ||
      !(gradient_bound > 0.0) || !(beta > 0.0) || lambda < 0.0) {
    throw InvalidArgument("theorem_step_size: inputs must be positive (lambda non-negative)");
  }
  const double numerator = beta * std::sqrt(static_cast<double>(k)) * delta;
  const double denominator = std::sqrt(static_cast<double>(n)) *
                             (gradient_bound + lambda * std::sqrt(static_cast<double>(r))) *
                             std::sqrt(static_cast<double>(iterations));
  return numerator / denominator;
}

SsgdResult basic_ssgd(const LossModel& loss, const BasicSsgdOptions& options, Rng& rng) {
  if (!(options.delta > 0.0)) throw InvalidArgument("basic_ssgd: delta must be positive");
  if (options.lambda < 0.0) throw InvalidArgument("basic_ssgd: lambda must be non-negative");
  const std::size_t m = loss.rows();
  const std::size_t n = loss.cols();
  const std::size_t cap = options.rank_cap.value_or(std::min(m, n));
  const std::size_t eval_every = std::max<std::size_t>(options.eval_every, 1);

  SsgdResult result;
  result.last = CompactSVD::zero(m, n);
  result.best = result.last;
  result.best_objective = objective(result.last, loss, options.lambda);
  result.best_iteration = 0;

  for (std::size_t t = 0; t < options.iterations; ++t) {
    const ProbeMatrix y = sample_probe(options.probe, n, options.k, rng, options.draw);
    const DenseMatrix s = subgradient_probe(result.last, loss, options.lambda, y, options.threads);
    result.last = incremental_update(result.last, s, y, options.step_size(t), cap, options.delta,
                                     options.scaling);
    if (options.on_iterate) options.on_iterate(t + 1, result.last);
    if ((t + 1) % eval_every == 0 || t + 1 == options.iterations) {
      const double value = objective(result.last, loss, options.lambda);
      if (value < result.best_objective) {
        result.best_objective = value;
        result.best = result.last;
        result.best_iteration = t + 1;
      }
    }
  }
  return result;
}

}  // namespace nnssgd
