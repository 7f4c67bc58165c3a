#pragma once

#include <cstddef>
#include <string_view>

#include <Eigen/Core>

#include "nnssgd/linalg.hpp"
#include "nnssgd/observations.hpp"

namespace nnssgd {

// A sum loss f(X) = sum_ij f_ij(X_ij) with convex scalar pieces.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;

  virtual double value_at(std::size_t i, std::size_t j, double x) const = 0;
  virtual double subgrad_at(std::size_t i, std::size_t j, double x) const = 0;

  /// f(X), in time proportional to the loss's support times rank(X).
  virtual double total_value(const CompactSVD& x) const = 0;

  /// out += scale * (grad f(X))[:, j].
  virtual void add_gradient_column(const CompactSVD& x, std::size_t j, double scale,
                                   Eigen::Ref<DenseVector> out) const = 0;
};

enum class LossKind { squared, absolute, smoothed_hinge };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Scalar piece phi(x; target) for each kind, unweighted.
double scalar_loss(LossKind kind, double x, double target);
double scalar_subgrad(LossKind kind, double x, double target);

// f_ij(x) = alpha * phi(x; Z_ij).
//
// Masked: supported on Omega only, which gives grad f = alpha * phi'(P_Omega(X))
// on Omega and zero elsewhere. Unmasked: every cell contributes with target 0
// off Omega (zero-imputed residuals).
//
// For the smoothed hinge the label is sign(Z_ij) (zero counts as +1) and
// phi(x) = h(label * x) with h(z) = 0 for z >= 1, (1 - z)^2 / 2 on (0, 1),
// and 1/2 - z for z <= 0.
//
// Holds a reference to the observations; they must outlive the loss.
class SumLoss final : public LossModel {
 public:
  SumLoss(LossKind kind, double alpha, const SparseObservations& targets, bool masked = true);

  std::size_t rows() const override { return targets_.rows(); }
  std::size_t cols() const override { return targets_.cols(); }

  LossKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  bool masked() const noexcept { return masked_; }
  const SparseObservations& targets() const noexcept { return targets_; }

  double value_at(std::size_t i, std::size_t j, double x) const override;
  double subgrad_at(std::size_t i, std::size_t j, double x) const override;
  double total_value(const CompactSVD& x) const override;
  void add_gradient_column(const CompactSVD& x, std::size_t j, double scale,
                           Eigen::Ref<DenseVector> out) const override;

 private:
  LossKind kind_;
  double alpha_;
  const SparseObservations& targets_;
  bool masked_;
};

}  // namespace nnssgd
