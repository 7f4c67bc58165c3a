#include <cmath>

#include "doctest.h"
#include "nnssgd/errors.hpp"
#include "nnssgd/probing.hpp"
#include "test_support.hpp"

using namespace nnssgd;
using namespace nnssgd::testing;

namespace {

double max_deviation_from_identity(ProbeKind kind, ColumnDraw draw, std::size_t n, std::size_t k,
                                   std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix sum = DenseMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < samples; ++s) {
    const DenseMatrix y = sample_probe(kind, n, k, rng, draw).materialize();
    sum.noalias() += y * y.transpose();
  }
  sum /= static_cast<double>(samples);
  return (sum - DenseMatrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
}

double mean_energy_ratio(ProbeKind kind, ColumnDraw draw, const DenseMatrix& a, std::size_t k,
                         std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(a.cols());
  double sum = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const DenseMatrix y = sample_probe(kind, n, k, rng, draw).materialize();
    sum += (a * y * y.transpose()).squaredNorm();
  }
  return sum / static_cast<double>(samples) / a.squaredNorm();
}

}  // namespace

TEST_SUITE("sample_probe") {
  TEST_CASE("column sampling stores indices and sqrt(n/k)") {
    Rng rng(1);
    const auto y = sample_probe(ProbeKind::column_sampling, 4, 2, rng);
    REQUIRE(y.indices.size() == 2);
    CHECK(y.scale == std::sqrt(2.0));
    CHECK(y.indices[0] != y.indices[1]);
    const DenseMatrix dense = y.materialize();
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(dense.col(static_cast<Eigen::Index>(c)).sum() == std::sqrt(2.0));
      CHECK(dense(static_cast<Eigen::Index>(y.indices[c]), static_cast<Eigen::Index>(c)) == std::sqrt(2.0));
      CHECK(y.indices[c] < 4);
    }
  }

  TEST_CASE("rademacher entries are +-1/sqrt(k)") {
    Rng rng(2);
    const auto y = sample_probe(ProbeKind::rademacher, 3, 3, rng);
    for (Eigen::Index i = 0; i < y.dense.size(); ++i) {
      CHECK(std::abs(y.dense.data()[i]) == 1.0 / std::sqrt(3.0));
    }
  }

  TEST_CASE("i.i.d. column draws can repeat and stay in range") {
    Rng rng(3);
    bool repeated = false;
    for (int trial = 0; trial < 200; ++trial) {
      const auto y = sample_probe(ProbeKind::column_sampling, 3, 3, rng, ColumnDraw::with_replacement);
      for (auto c : y.indices) CHECK(c < 3);
      repeated |= y.indices[0] == y.indices[1] || y.indices[1] == y.indices[2] || y.indices[0] == y.indices[2];
    }
    CHECK(repeated);
  }

  TEST_CASE("k outside [1, n] is rejected") {
    Rng rng(4);
    CHECK_THROWS_AS(sample_probe(ProbeKind::gaussian, 3, 0, rng), InvalidArgument);
    CHECK_THROWS_AS(sample_probe(ProbeKind::column_sampling, 3, 4, rng), InvalidArgument);
  }

  TEST_CASE("identical seeds give identical sequences") {
    for (auto kind : {ProbeKind::column_sampling, ProbeKind::rademacher, ProbeKind::gaussian}) {
      Rng a(99), b(99);
      for (int s = 0; s < 50; ++s) {
        const auto ya = sample_probe(kind, 17, 4, a);
        const auto yb = sample_probe(kind, 17, 4, b);
        CHECK(ya.indices == yb.indices);
        CHECK(ya.materialize() == yb.materialize());
      }
    }
  }

  TEST_CASE("Monte Carlo mean of Y Y^T approaches the identity") {
    for (auto kind : {ProbeKind::column_sampling, ProbeKind::rademacher, ProbeKind::gaussian}) {
      CAPTURE(to_string(kind));
      CHECK(max_deviation_from_identity(kind, ColumnDraw::without_replacement, 6, 2, 100000, 7) <= 0.02);
    }
    CHECK(max_deviation_from_identity(ProbeKind::column_sampling, ColumnDraw::with_replacement, 6, 2,
                                      100000, 8) <= 0.02);
  }

  TEST_CASE("second moment E||A Y Y^T||^2 / ||A||^2 matches the analytic factor") {
    // Analytic E[Y Y^T Y Y^T] = c I with, for n = 6, k = 2:
    //   distinct columns  c = n/k                = 3
    //   i.i.d. columns    c = n/k + (k-1)/k      = 3.5
    //   rademacher        c = (n + k - 1) / k    = 3.5
    //   gaussian          c = (n + k + 1) / k    = 4.5
    Rng rng(11);
    const DenseMatrix a = random_matrix(rng, 6, 6);
    CHECK(mean_energy_ratio(ProbeKind::column_sampling, ColumnDraw::without_replacement, a, 2, 100000, 1) ==
          doctest::Approx(3.0).epsilon(0.02));
    CHECK(mean_energy_ratio(ProbeKind::column_sampling, ColumnDraw::with_replacement, a, 2, 100000, 2) ==
          doctest::Approx(3.5).epsilon(0.02));
    CHECK(mean_energy_ratio(ProbeKind::rademacher, ColumnDraw::without_replacement, a, 2, 100000, 3) ==
          doctest::Approx(3.5).epsilon(0.02));
    CHECK(mean_energy_ratio(ProbeKind::gaussian, ColumnDraw::without_replacement, a, 2, 100000, 4) ==
          doctest::Approx(4.5).epsilon(0.03));
  }
}

TEST_SUITE("apply_probe") {
  TEST_CASE("duplicated sampled column is scaled and repeated") {
    Rng rng(20);
    const DenseMatrix a = random_matrix(rng, 4, 3);
    ProbeMatrix y;
    y.kind = ProbeKind::column_sampling;
    y.n = 3;
    y.k = 2;
    y.indices = {2, 2};
    y.scale = std::sqrt(1.5);
    std::size_t evaluations = 0;
    const DenseMatrix out = apply_probe_right(
        4, [&](std::size_t j) { ++evaluations; return DenseVector(a.col(static_cast<Eigen::Index>(j))); }, y);
    CHECK(evaluations == 2);
    CHECK((out.col(0) - std::sqrt(1.5) * a.col(2)).norm() < 1e-15);
    CHECK((out.col(1) - std::sqrt(1.5) * a.col(2)).norm() < 1e-15);
  }

  TEST_CASE("all-ones sign matrix yields scaled row sums") {
    Rng rng(21);
    const DenseMatrix a = random_matrix(rng, 5, 4);
    ProbeMatrix y;
    y.kind = ProbeKind::rademacher;
    y.n = 4;
    y.k = 3;
    y.dense = DenseMatrix::Constant(4, 3, 1.0 / std::sqrt(3.0));
    const DenseMatrix out =
        apply_probe_right(5, [&](std::size_t j) { return DenseVector(a.col(static_cast<Eigen::Index>(j))); }, y);
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK((out.col(c) - a.rowwise().sum() / std::sqrt(3.0)).norm() < 1e-14);
    }
  }

  TEST_CASE("matches an explicit dense product") {
    Rng rng(22);
    const DenseMatrix a = random_matrix(rng, 10, 7);
    const ColumnAccessor columns = [&](std::size_t j) { return DenseVector(a.col(static_cast<Eigen::Index>(j))); };
    for (auto kind : {ProbeKind::column_sampling, ProbeKind::rademacher, ProbeKind::gaussian}) {
      const auto y = sample_probe(kind, 7, 3, rng);
      CHECK((apply_probe_right(10, columns, y) - a * y.materialize()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("transpose product keeps the factor pair") {
    ProbeMatrix y;
    y.kind = ProbeKind::column_sampling;
    y.n = 3;
    y.k = 1;
    y.indices = {2};
    y.scale = std::sqrt(3.0);
    DenseMatrix s(2, 1);
    s << 1.5, -2.0;
    const auto product = apply_probe_transpose_right(s, y);
    DenseMatrix expected = DenseMatrix::Zero(2, 3);
    expected.col(2) = std::sqrt(3.0) * s.col(0);
    CHECK((product.densify() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("densified pair equals the oracle product and has rank <= k") {
    Rng rng(23);
    const DenseMatrix s = random_matrix(rng, 5, 2);
    const auto y = sample_probe(ProbeKind::gaussian, 4, 2, rng);
    const auto product = apply_probe_transpose_right(s, y);
    CHECK((product.densify() - s * y.dense.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    const DenseVector sv = oracle_singular_values(product.densify());
    CHECK(sv(2) <= 1e-12 * sv(0));
  }

  TEST_CASE("width mismatch is rejected") {
    Rng rng(24);
    const auto y = sample_probe(ProbeKind::column_sampling, 4, 2, rng);
    CHECK_THROWS_AS(apply_probe_transpose_right(DenseMatrix::Zero(3, 3), y), InvalidArgument);
  }
}
