#include "nnssgd/observations.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nnssgd/errors.hpp"

namespace nnssgd {

SparseObservations::SparseObservations(std::size_t rows, std::size_t cols,
                                       std::vector<Observation> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.row >= rows_ || e.col >= cols_) {
      throw DataError("observation (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                      ") outside a " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                      " grid");
    }
    if (!std::isfinite(e.value)) {
      throw DataError("non-finite observation at (" + std::to_string(e.row) + ", " +
                      std::to_string(e.col) + ")");
    }
  }
  std::sort(entries_.begin(), entries_.end(), [](const Observation& a, const Observation& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  for (std::size_t t = 1; t < entries_.size(); ++t) {
    if (entries_[t].row == entries_[t - 1].row && entries_[t].col == entries_[t - 1].col) {
      throw DataError("duplicate observation at (" + std::to_string(entries_[t].row) + ", " +
                      std::to_string(entries_[t].col) + ")");
    }
  }
  col_offsets_.assign(cols_ + 1, 0);
  for (const auto& e : entries_) ++col_offsets_[e.col + 1];
  for (std::size_t j = 0; j < cols_; ++j) col_offsets_[j + 1] += col_offsets_[j];
}

std::span<const Observation> SparseObservations::column(std::size_t j) const {
  if (j >= cols_) throw InvalidArgument("column index out of range");
  return std::span<const Observation>(entries_).subspan(col_offsets_[j],
                                                        col_offsets_[j + 1] - col_offsets_[j]);
}

std::optional<double> SparseObservations::find(std::size_t i, std::size_t j) const {
  const auto col = column(j);
  const auto it = std::lower_bound(col.begin(), col.end(), i,
                                   [](const Observation& e, std::size_t r) { return e.row < r; });
  if (it != col.end() && it->row == i) return it->value;
  return std::nullopt;
}

double SparseObservations::frobenius_norm_sq() const noexcept {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.value * e.value;
  return sum;
}

double SparseObservations::frobenius_norm() const noexcept { return std::sqrt(frobenius_norm_sq()); }

SparseObservations SparseObservations::with_dims(std::size_t rows, std::size_t cols) const {
  if (rows < rows_ || cols < cols_) throw InvalidArgument("with_dims cannot shrink the grid");
  return SparseObservations(rows, cols, entries_);
}

SparseObservations SparseObservations::scaled(double factor) const {
  auto copy = entries_;
  for (auto& e : copy) e.value *= factor;
  return SparseObservations(rows_, cols_, std::move(copy));
}

Eigen::MatrixXd SparseObservations::multiply(const Eigen::MatrixXd& b) const {
  if (static_cast<std::size_t>(b.rows()) != cols_) throw InvalidArgument("multiply: shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), b.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    for (const auto& e : entries_) {
      out(static_cast<Eigen::Index>(e.row), c) += e.value * b(static_cast<Eigen::Index>(e.col), c);
    }
  }
  return out;
}

Eigen::MatrixXd SparseObservations::multiply_transpose(const Eigen::MatrixXd& b) const {
  if (static_cast<std::size_t>(b.rows()) != rows_) {
    throw InvalidArgument("multiply_transpose: shape mismatch");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cols_), b.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    for (const auto& e : entries_) {
      out(static_cast<Eigen::Index>(e.col), c) += e.value * b(static_cast<Eigen::Index>(e.row), c);
    }
  }
  return out;
}

Eigen::MatrixXd SparseObservations::to_dense() const {
  Eigen::MatrixXd dense =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (const auto& e : entries_) {
    dense(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
  }
  return dense;
}

}  // namespace nnssgd
