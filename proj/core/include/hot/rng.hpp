// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace hot {

/// Portable xorshift64* generator.
///
/// The seed is expanded with one splitmix64 step so that any 64-bit seed
/// (including 0) yields a non-zero state:
///
///   z = seed + 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   state = z ^ (z >> 31)            (state = 1 if this is 0)
///
/// Each draw then applies
///
///   state ^= state >> 12;  state ^= state << 25;  state ^= state >> 27
///   out = state * 0x2545F4914F6CDD1D
///
/// Doubles use the top 53 bits of `out`; normals use Box–Muller with the
/// second variate cached. No std:: distributions are involved, so streams are
/// identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Standard normal.
  double normal() noexcept;
  /// Uniform integer in [0, n); n must be positive.
  std::size_t below(std::size_t n) noexcept;

  /// Independent stream derived from this generator's seed and `stream`.
  Rng split(std::uint64_t stream) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Fisher–Yates shuffle driven by `rng`.
void shuffle(std::span<std::size_t> values, Rng& rng);

}  // namespace hot
