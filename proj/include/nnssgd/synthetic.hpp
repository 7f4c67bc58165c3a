#pragma once

#include <cstddef>
#include <cstdint>

#include "nnssgd/linalg.hpp"
#include "nnssgd/observations.hpp"

namespace nnssgd {

struct SyntheticProblem {
  SparseObservations train;
  SparseObservations test;
  CompactSVD truth;
};

/// Ground truth A B^T with standard-normal factors, rescaled so the mean
/// squared entry is 1. ceil(density * m * n) cells are drawn without
/// replacement and split 80/20 into train/test (test gets floor(N / 5)).
/// Observed values are truth entries plus N(0, noise_std^2) noise.
SyntheticProblem gen_synthetic(std::size_t rows, std::size_t cols, std::size_t rank, double density,
                               double noise_std, std::uint64_t seed);

}  // namespace nnssgd
