#include "nnssgd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "nnssgd/errors.hpp"
#include "nnssgd/rng.hpp"

namespace nnssgd {

using Index = Eigen::Index;

SyntheticProblem gen_synthetic(std::size_t rows, std::size_t cols, std::size_t rank, double density,
                               double noise_std, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw InvalidArgument("gen_synthetic: empty grid");
  if (!(density > 0.0) || density > 1.0) throw InvalidArgument("gen_synthetic: density must lie in (0, 1]");
  if (rank < 1 || rank > std::min(rows, cols)) {
    throw InvalidArgument("gen_synthetic: rank must lie in [1, min(m, n)]");
  }
  if (noise_std < 0.0 || !std::isfinite(noise_std)) {
    throw InvalidArgument("gen_synthetic: noise_std must be finite and non-negative");
  }
  const double cells = static_cast<double>(rows) * static_cast<double>(cols);
  if (density * cells < 10.0) {
    throw InvalidArgument("gen_synthetic: fewer than 10 observed cells (density * m * n = " +
                          std::to_string(density * cells) + ")");
  }

  Rng rng(seed);
  DenseMatrix a(static_cast<Index>(rows), static_cast<Index>(rank));
  DenseMatrix b(static_cast<Index>(cols), static_cast<Index>(rank));
  for (Index c = 0; c < a.cols(); ++c) {
    for (Index r = 0; r < a.rows(); ++r) a(r, c) = rng.normal();
  }
  for (Index c = 0; c < b.cols(); ++c) {
    for (Index r = 0; r < b.rows(); ++r) b(r, c) = rng.normal();
  }
  // ||A B^T||_F^2 = trace(A^T A B^T B).
  const double norm_sq = ((a.transpose() * a) * (b.transpose() * b)).trace();
  a *= std::sqrt(cells / norm_sq);

  const QRFactors qa = reduced_qr(a);
  const QRFactors qb = reduced_qr(b);
  const SVDFactors core = small_svd(qa.R * qb.R.transpose());
  SyntheticProblem out;
  out.truth = drop_negligible(CompactSVD{qa.Q * core.M, core.s, qb.Q * core.N});

  // Floyd's sampling of `count` distinct cells out of rows * cols.
  const auto total = static_cast<std::uint64_t>(rows) * cols;
  const auto count = static_cast<std::uint64_t>(std::ceil(density * cells));
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count);
  for (std::uint64_t j = total - count; j < total; ++j) {
    const std::uint64_t t = rng.uniform_index(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> picked(chosen.begin(), chosen.end());
  std::sort(picked.begin(), picked.end());
  for (std::size_t i = picked.size(); i > 1; --i) {
    std::swap(picked[i - 1], picked[rng.uniform_index(i)]);
  }

  const std::size_t test_count = picked.size() / 5;
  std::vector<Observation> train, test;
  train.reserve(picked.size() - test_count);
  test.reserve(test_count);
  for (std::size_t t = 0; t < picked.size(); ++t) {
    const std::size_t i = picked[t] / cols;
    const std::size_t j = picked[t] % cols;
    double value = out.truth.entry(i, j);
    if (noise_std > 0.0) value += noise_std * rng.normal();
    (t < test_count ? test : train).push_back({i, j, value});
  }
  out.train = SparseObservations(rows, cols, std::move(train));
  out.test = SparseObservations(rows, cols, std::move(test));
  return out;
}

}  // namespace nnssgd
