#pragma once

#include <array>
#include <cstdint>

namespace nnssgd {

// xoshiro256** seeded through splitmix64. The standard library's
// distributions are implementation-defined, so uniform and normal draws are
// derived here from raw 64-bit outputs to keep probe sequences identical
// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept;

  /// Fair coin mapped to {-1, +1}.
  double sign() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t seed_ = 0;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nnssgd
