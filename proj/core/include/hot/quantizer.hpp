// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hot/matrix.hpp"

namespace hot {

enum class Granularity : std::uint8_t { PerTensor = 0, PerRow = 1 };

enum class Rounding {
  PseudoStochastic,  // round up iff frac(v/scale) > (low 11 mantissa bits of v) / 2^11
  Nearest            // round half away from zero
};

/// Largest code magnitude for a symmetric signed range: 7 (INT4) or 127 (INT8).
int qmax_for_bits(int bits);

/// Symmetric (zero-point free) quantization parameters.
struct QParams {
  int bits = 8;
  Granularity granularity = Granularity::PerTensor;
  std::vector<float> scales;  // one entry, or one per row

  int qmax() const { return qmax_for_bits(bits); }
  float scale_for_row(std::size_t r) const {
    return granularity == Granularity::PerTensor ? scales.front() : scales[r];
  }
  bool operator==(const QParams&) const = default;
};

/// Max-abs scales: scale = max|m| / qmax over the tensor or over each row.
/// All-zero ranges get the smallest positive normal float. The scale is nudged
/// up by ulps if needed so that max|m| / scale never exceeds qmax.
QParams compute_qparams(const Matrix& m, int bits, Granularity granularity);

/// Pseudo-stochastic code for v (clamped to [-qmax, qmax]).
int pseudo_stochastic_round(float v, float scale, int qmax);
/// Round-half-away-from-zero code for v (clamped to [-qmax, qmax]).
int round_nearest(float v, float scale, int qmax);

/// Integer payload plus its scales. 8-bit codes are stored one per byte;
/// 4-bit codes are packed two per byte within each row, even column in the
/// low nibble, odd row lengths padded with a zero high nibble.
class QuantTensor {
 public:
  QuantTensor() = default;

  /// Builds a tensor from unpacked row-major codes; rejects codes outside [-qmax, qmax].
  static QuantTensor from_codes(std::size_t rows, std::size_t cols, std::span<const std::int8_t> codes,
                                QParams params);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  int bits() const noexcept { return params_.bits; }
  const QParams& params() const noexcept { return params_; }
  std::span<const std::uint8_t> payload() const noexcept { return payload_; }
  std::size_t row_stride_bytes() const noexcept;

  int code(std::size_t r, std::size_t c) const;
  /// Unpacked row-major codes.
  std::vector<std::int8_t> codes() const;

  /// Number of elements clamped while this tensor was quantized.
  std::size_t saturated() const noexcept { return saturated_; }

  bool operator==(const QuantTensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && params_ == o.params_ && payload_ == o.payload_;
  }

 private:
  friend QuantTensor quantize_with(const Matrix&, const QParams&, Rounding);
  friend QuantTensor read_quant_tensor(std::istream&);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  QParams params_;
  std::vector<std::uint8_t> payload_;
  std::size_t saturated_ = 0;
};

QuantTensor quantize(const Matrix& m, int bits, Granularity granularity, Rounding rounding);
/// Quantizes with caller-supplied parameters (codes may saturate).
QuantTensor quantize_with(const Matrix& m, const QParams& params, Rounding rounding);
Matrix dequantize(const QuantTensor& q);

/// Two's-complement nibble packing; codes must lie in [-8, 7].
std::vector<std::uint8_t> pack_nibbles(std::span<const std::int8_t> codes);
std::vector<std::int8_t> unpack_nibbles(std::span<const std::uint8_t> bytes, std::size_t count);

// HOTQ fixture format: "HOTQ", u8 bits, u8 granularity, u32 rows, u32 cols,
// f32 scales (1 or rows), payload bytes; little-endian.
void write_quant_tensor(std::ostream& os, const QuantTensor& q);
QuantTensor read_quant_tensor(std::istream& is);
/// Serialized size of `q` in the HOTQ format.
std::size_t quant_tensor_record_bytes(const QuantTensor& q);

}  // namespace hot
