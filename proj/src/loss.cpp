#include "nnssgd/loss.hpp"

#include <cmath>
#include <string>

#include "nnssgd/errors.hpp"

namespace nnssgd {

using Index = Eigen::Index;

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared: return "squared";
    case LossKind::absolute: return "absolute";
    case LossKind::smoothed_hinge: return "hinge";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared") return LossKind::squared;
  if (name == "absolute") return LossKind::absolute;
  if (name == "hinge" || name == "smoothed_hinge") return LossKind::smoothed_hinge;
  throw InvalidArgument("unknown loss kind '" + std::string(name) + "'");
}

double scalar_loss(LossKind kind, double x, double target) {
  switch (kind) {
    case LossKind::squared: {
      const double d = x - target;
      return d * d;
    }
    case LossKind::absolute: return std::abs(x - target);
    case LossKind::smoothed_hinge: {
      const double z = (target >= 0.0 ? 1.0 : -1.0) * x;
      if (z >= 1.0) return 0.0;
      if (z > 0.0) return 0.5 * (1.0 - z) * (1.0 - z);
      return 0.5 - z;
    }
  }
  return 0.0;
}

double scalar_subgrad(LossKind kind, double x, double target) {
  switch (kind) {
    case LossKind::squared: return 2.0 * (x - target);
    case LossKind::absolute: {
      const double d = x - target;
      return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
    case LossKind::smoothed_hinge: {
      const double label = target >= 0.0 ? 1.0 : -1.0;
      const double z = label * x;
      if (z >= 1.0) return 0.0;
      if (z > 0.0) return -label * (1.0 - z);
      return -label;
    }
  }
  return 0.0;
}

SumLoss::SumLoss(LossKind kind, double alpha, const SparseObservations& targets, bool masked)
    : kind_(kind), alpha_(alpha), targets_(targets), masked_(masked) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("SumLoss: alpha must be positive and finite");
  }
}

double SumLoss::value_at(std::size_t i, std::size_t j, double x) const {
  const auto target = targets_.find(i, j);
  if (!target && masked_) return 0.0;
  return alpha_ * scalar_loss(kind_, x, target.value_or(0.0));
}

double SumLoss::subgrad_at(std::size_t i, std::size_t j, double x) const {
  const auto target = targets_.find(i, j);
  if (!target && masked_) return 0.0;
  return alpha_ * scalar_subgrad(kind_, x, target.value_or(0.0));
}

double SumLoss::total_value(const CompactSVD& x) const {
  double sum = 0.0;
  if (masked_) {
    for (const auto& e : targets_.entries()) sum += scalar_loss(kind_, x.entry(e.row, e.col), e.value);
    return alpha_ * sum;
  }
  for (std::size_t j = 0; j < cols(); ++j) {
    const DenseVector column = x.column(j);
    const auto observed = targets_.column(j);
    auto it = observed.begin();
    for (std::size_t i = 0; i < rows(); ++i) {
      double target = 0.0;
      if (it != observed.end() && it->row == i) target = (it++)->value;
      sum += scalar_loss(kind_, column(static_cast<Index>(i)), target);
    }
  }
  return alpha_ * sum;
}

void SumLoss::add_gradient_column(const CompactSVD& x, std::size_t j, double scale,
                                  Eigen::Ref<DenseVector> out) const {
  const double weight = scale * alpha_;
  const auto observed = targets_.column(j);
  if (masked_) {
    if (x.rank() == 0) {
      for (const auto& e : observed) {
        out(static_cast<Index>(e.row)) += weight * scalar_subgrad(kind_, 0.0, e.value);
      }
      return;
    }
    // Only the observed rows of column j are reconstructed: O(nnz_j * p).
    const DenseVector weights = x.sigma.cwiseProduct(x.V.row(static_cast<Index>(j)).transpose());
    for (const auto& e : observed) {
      const double xij = x.U.row(static_cast<Index>(e.row)).dot(weights);
      out(static_cast<Index>(e.row)) += weight * scalar_subgrad(kind_, xij, e.value);
    }
    return;
  }
  const DenseVector column = x.column(j);
  auto it = observed.begin();
  for (std::size_t i = 0; i < rows(); ++i) {
    double target = 0.0;
    if (it != observed.end() && it->row == i) target = (it++)->value;
    out(static_cast<Index>(i)) += weight * scalar_subgrad(kind_, column(static_cast<Index>(i)), target);
  }
}

}  // namespace nnssgd
