#include "nnssgd/probing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nnssgd/errors.hpp"

namespace nnssgd {

using Index = Eigen::Index;

std::string_view to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::column_sampling: return "columns";
    case ProbeKind::rademacher: return "rademacher";
    case ProbeKind::gaussian: return "gaussian";
  }
  return "unknown";
}

ProbeKind parse_probe_kind(std::string_view name) {
  if (name == "columns" || name == "column_sampling") return ProbeKind::column_sampling;
  if (name == "rademacher") return ProbeKind::rademacher;
  if (name == "gaussian") return ProbeKind::gaussian;
  throw InvalidArgument("unknown probe kind '" + std::string(name) + "'");
}

DenseMatrix ProbeMatrix::materialize() const {
  if (kind != ProbeKind::column_sampling) return dense;
  DenseMatrix y = DenseMatrix::Zero(static_cast<Index>(n), static_cast<Index>(k));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    y(static_cast<Index>(indices[c]), static_cast<Index>(c)) = scale;
  }
  return y;
}

ProbeMatrix sample_probe(ProbeKind kind, std::size_t n, std::size_t k, Rng& rng, ColumnDraw draw) {
  if (k < 1 || k > n) {
    throw InvalidArgument("sample_probe: need 1 <= k <= n, got k=" + std::to_string(k) +
                          ", n=" + std::to_string(n));
  }
  ProbeMatrix y;
  y.kind = kind;
  y.n = n;
  y.k = k;
  const Index rows = static_cast<Index>(n);
  const Index cols = static_cast<Index>(k);
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
  switch (kind) {
    case ProbeKind::column_sampling:
      y.scale = std::sqrt(static_cast<double>(n) / static_cast<double>(k));
      y.indices.reserve(k);
      if (draw == ColumnDraw::with_replacement) {
        for (std::size_t c = 0; c < k; ++c) y.indices.push_back(rng.uniform_index(n));
        break;
      }
      // Floyd's algorithm: k distinct indices in O(k^2) without touching n.
      for (std::size_t j = n - k; j < n; ++j) {
        const std::size_t t = rng.uniform_index(j + 1);
        const bool seen = std::find(y.indices.begin(), y.indices.end(), t) != y.indices.end();
        y.indices.push_back(seen ? j : t);
      }
      break;
    case ProbeKind::rademacher:
      y.dense.resize(rows, cols);
      for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) y.dense(r, c) = rng.sign() * inv_sqrt_k;
      }
      break;
    case ProbeKind::gaussian:
      y.dense.resize(rows, cols);
      for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) y.dense(r, c) = rng.normal() * inv_sqrt_k;
      }
      break;
  }
  return y;
}

DenseMatrix apply_probe_right(std::size_t rows, const ColumnAccessor& columns, const ProbeMatrix& y) {
  DenseMatrix out = DenseMatrix::Zero(static_cast<Index>(rows), static_cast<Index>(y.k));
  if (y.kind == ProbeKind::column_sampling) {
    for (std::size_t c = 0; c < y.k; ++c) {
      out.col(static_cast<Index>(c)) = y.scale * columns(y.indices[c]);
    }
    return out;
  }
  for (std::size_t j = 0; j < y.n; ++j) {
    const DenseVector a = columns(j);
    out.noalias() += a * y.dense.row(static_cast<Index>(j));
  }
  return out;
}

ProbeProduct apply_probe_transpose_right(const DenseMatrix& s, const ProbeMatrix& y) {
  if (static_cast<std::size_t>(s.cols()) != y.k) {
    throw InvalidArgument("apply_probe_transpose_right: S has " + std::to_string(s.cols()) +
                          " columns, probe width is " + std::to_string(y.k));
  }
  return ProbeProduct{s, y.materialize()};
}

}  // namespace nnssgd
