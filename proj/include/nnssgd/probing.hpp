#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "nnssgd/linalg.hpp"
#include "nnssgd/rng.hpp"

namespace nnssgd {

enum class ProbeKind { column_sampling, rademacher, gaussian };

/// How column-sampling probes draw their k indices. Both give E[Y Y^T] = I.
/// Without replacement also gives E||A Y Y^T||_F^2 = (n/k) ||A||_F^2; i.i.d.
/// draws add (k-1)/k ||A||_F^2 from repeated columns.
enum class ColumnDraw { without_replacement, with_replacement };

std::string_view to_string(ProbeKind kind);
ProbeKind parse_probe_kind(std::string_view name);

// A random n x k matrix Y with E[Y Y^T] = I.
//
// Column sampling keeps only the sampled column indices and the common scale sqrt(n / k); column i of Y is scale * e_{indices[i]}.
// The dense kinds hold the explicit matrix, already divided by sqrt(k).
struct ProbeMatrix {
  ProbeKind kind = ProbeKind::column_sampling;
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> indices;
  double scale = 0.0;
  DenseMatrix dense;

  DenseMatrix materialize() const;
};

/// Draws a probe. Throws InvalidArgument unless 1 <= k <= n.
ProbeMatrix sample_probe(ProbeKind kind, std::size_t n, std::size_t k, Rng& rng,
                         ColumnDraw draw = ColumnDraw::without_replacement);

/// Returns column j of some m x n matrix A.
using ColumnAccessor = std::function<DenseVector(std::size_t)>;

/// A * Y. Column sampling evaluates exactly the k sampled columns; dense
/// probes evaluate all n.
DenseMatrix apply_probe_right(std::size_t rows, const ColumnAccessor& columns, const ProbeMatrix& y);

// The rank-<=k product S * Y^T, kept in factored form.
struct ProbeProduct {
  DenseMatrix S;  // m x k
  DenseMatrix Y;  // n x k, the materialized probe used for the V-hat block

  DenseMatrix densify() const { return S * Y.transpose(); }
};

/// Pairs S with Y. Throws InvalidArgument if S does not have k columns.
ProbeProduct apply_probe_transpose_right(const DenseMatrix& s, const ProbeMatrix& y);

}  // namespace nnssgd
