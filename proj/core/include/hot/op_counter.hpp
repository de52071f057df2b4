// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace hot {

/// Elementary operations performed by the transform and quantization kernels.
struct OpCounts {
  std::uint64_t butterfly_addsub = 0;      // FWHT additions + subtractions
  std::uint64_t normalize_muls = 0;        // 1/sqrt(n) scaling after each FWHT
  std::uint64_t quantized_elements = 0;    // elements mapped to integer codes
  std::uint64_t dequantized_elements = 0;  // integer GEMM outputs scaled back to FP32
  std::uint64_t saturated_elements = 0;    // codes clamped to [-qmax, qmax]

  /// FLOPs under the analytic overhead model's convention: every butterfly
  /// add/sub and every (de)quantized element costs 2 FLOPs (one multiply-add).
  /// The normalization multiply is excluded because it folds into the
  /// quantization scale.
  double model_flops() const noexcept {
    return 2.0 * static_cast<double>(butterfly_addsub + quantized_elements + dequantized_elements);
  }

  OpCounts& operator+=(const OpCounts& o) noexcept;
};

/// Collects operation counts on the current thread for its lifetime.
/// Scopes nest; an inner scope's counts are added to the enclosing one on exit.
class ScopedOpCount {
 public:
  ScopedOpCount();
  ~ScopedOpCount();
  ScopedOpCount(const ScopedOpCount&) = delete;
  ScopedOpCount& operator=(const ScopedOpCount&) = delete;

  const OpCounts& counts() const noexcept { return counts_; }

 private:
  OpCounts counts_;
  ScopedOpCount* previous_;
};

namespace detail {
/// Active counter on this thread, or nullptr when nothing is being counted.
OpCounts* active_op_counts() noexcept;
}  // namespace detail

}  // namespace hot
