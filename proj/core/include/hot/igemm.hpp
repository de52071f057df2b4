// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hot/matrix.hpp"
#include "hot/quantizer.hpp"

namespace hot {

/// Inner-dimension limit that keeps |acc| <= N·127² below 2^31.
inline constexpr std::size_t kMaxInnerDim = 131000;

/// Row-major int32 accumulators.
struct AccumMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> data;

  std::int32_t operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  bool operator==(const AccumMatrix&) const = default;
};

/// Exact integer product of the code matrices of `a` (M×N) and `b` (N×K).
/// Both operands must share a bit width; INT4 payloads are unpacked internally.
AccumMatrix gemm_int(const QuantTensor& a, const QuantTensor& b);

/// Where the per-row scales of the left operand sit relative to the product.
enum class RowScaleMode {
  OutputRows,  // rows of `a` are rows of the output: scales factor out exactly
  Contracted   // rows of `a` are summed over: not expressible after the GEMM
};

/// out = acc · s_a · s_b with per-row s_a applied to output rows. `b` must be
/// per-tensor. Contracted mode throws; use gemm_int_rowscaled instead.
Matrix apply_scales(const AccumMatrix& acc, const QParams& a_params, const QParams& b_params,
                    RowScaleMode a_row_scales = RowScaleMode::OutputRows);

/// out[m][k] = s_a · s_b · Σ_n contracted_scales[n] · a[m][n] · b[n][k], where
/// every integer product is formed exactly and the scaled partials are summed
/// in FP64. `a` and `b` must be per-tensor; their scales multiply the result.
Matrix gemm_int_rowscaled(const QuantTensor& a, const QuantTensor& b, std::span<const float> contracted_scales);

}  // namespace hot
