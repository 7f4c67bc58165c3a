#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace nnssgd {

struct Observation {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Index set Omega with its values over an m x n grid. Doubles as the matrix Z
// that is zero off Omega. Entries are stored column-major (by column, then
// row) with per-column offsets so a column-sampling probe touches only the
// entries of its sampled columns. Indices are zero-based.
class SparseObservations {
 public:
  SparseObservations() = default;

  /// Throws DataError on out-of-range indices, duplicates, or non-finite
  /// values.
  SparseObservations(std::size_t rows, std::size_t cols, std::vector<Observation> entries);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// All entries, ordered by column then row.
  std::span<const Observation> entries() const noexcept { return entries_; }

  /// Entries of column j, sorted by row.
  std::span<const Observation> column(std::size_t j) const;

  std::optional<double> find(std::size_t i, std::size_t j) const;

  double frobenius_norm_sq() const noexcept;
  double frobenius_norm() const noexcept;

  /// Same entries on a grid at least as large.
  SparseObservations with_dims(std::size_t rows, std::size_t cols) const;

  /// Same pattern with every value multiplied by factor.
  SparseObservations scaled(double factor) const;

  /// Z * B for a dense B with cols() rows.
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& b) const;

  /// Z^T * B for a dense B with rows() rows.
  Eigen::MatrixXd multiply_transpose(const Eigen::MatrixXd& b) const;

  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Observation> entries_;
  std::vector<std::size_t> col_offsets_;
};

}  // namespace nnssgd
