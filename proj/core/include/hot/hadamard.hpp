// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hot/matrix.hpp"

namespace hot {

/// Which matrix dimension a transform runs along. `Rows` transforms each
/// column vector (the row index is tiled); `Cols` transforms each row vector.
enum class Axis { Rows, Cols };

enum class LowpassOrdering {
  LpL1,     // 2-D sequency pairs ranked by a+b, then a, then b
  Sequency  // 1-D sequency of the tile-length Walsh row
};

struct HadamardConfig {
  std::size_t tile = 16;  // power of two
  std::size_t rank = 8;   // 1 <= rank <= tile
  LowpassOrdering ordering = LowpassOrdering::LpL1;

  /// Throws std::invalid_argument when tile is not a power of two or rank is out of range.
  void validate() const;
  bool operator==(const HadamardConfig&) const = default;
};

/// Positions (within one tile) of the Hadamard coefficients HLA keeps, in
/// selection order. Always the first `rank` entries of the full ordering.
struct LowpassIndexSet {
  std::vector<std::size_t> indices;
  bool operator==(const LowpassIndexSet&) const = default;
};

inline constexpr unsigned kMaxHadamardOrder = 12;  // 2^12 = 4096

/// Orthonormal Sylvester matrix H_d (2^d × 2^d), entries ±2^(-d/2).
Matrix build_hadamard(unsigned d);

bool is_power_of_two(std::size_t n) noexcept;
std::size_t log2_exact(std::size_t n);
/// Smallest multiple of `tile` that is >= len.
std::size_t padded_length(std::size_t len, std::size_t tile) noexcept;

/// In-place orthonormal fast Walsh–Hadamard transform (natural order):
/// n·log2(n) butterfly adds/subs followed by one 1/sqrt(n) scaling pass.
void fwht_inplace(std::span<float> v);
std::vector<float> fwht(std::span<const float> v);

/// Number of sign changes along row `index` of the natural-order Walsh matrix of size n.
std::size_t walsh_sequency(std::size_t index, std::size_t n);

/// Block-diagonal HT: the chosen axis is zero-padded to a multiple of
/// cfg.tile and every tile is transformed independently. The result keeps the
/// padded length.
Matrix block_ht(const Matrix& m, Axis axis, const HadamardConfig& cfg);

LowpassIndexSet lowpass_indices(const HadamardConfig& cfg);

/// Keeps cfg.rank low-pass coefficients per tile along `axis`; that dimension
/// becomes ceil(len / tile) · rank.
Matrix hla_reduce(const Matrix& m, Axis axis, const HadamardConfig& cfg);

/// Scatters reduced coefficients back to their tile positions, applies the
/// inverse transform and crops the axis to `original_len`.
Matrix hla_lift(const Matrix& reduced, Axis axis, const HadamardConfig& cfg, std::size_t original_len);

}  // namespace hot
