// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <variant>

#include "hot/hadamard.hpp"
#include "hot/matrix.hpp"
#include "hot/quantizer.hpp"

namespace hot {

/// How g_x = g_y · w is computed.
enum class GxMode {
  Fp,           // plain FP32 product
  HqInt4,       // block HT along O on both operands, INT4 GEMM
  HqInt8,       // same with INT8
  HqExact,      // HT along O without quantization (transform check)
  QInt4,        // INT4 GEMM without any transform (outlier comparison)
  ExternalHla,  // low-rank along L: lift(reduce(g_y) · w)
  InternalHla   // low-rank along the contracted O dimension
};

/// How g_w = g_yᵀ · x is computed.
enum class GwMode {
  Fp,
  HlaInt8,  // low-rank along L, INT8 GEMM
  HlaFp,    // low-rank along L without quantization
  HqInt4    // block HT along L, INT4 GEMM
};

enum class GyGranularity { PerTensor, PerToken };

/// Axis that carries per-token scales on the g_w path.
enum class TokenAxis {
  ContractedL,  // one scale per reduced-L row of g_y; needs scaled accumulation
  OutputO       // one scale per row of g_yᵀ (output channel); factors out after the GEMM
};

struct BackwardConfig {
  GxMode gx_mode = GxMode::HqInt4;
  GwMode gw_mode = GwMode::HlaInt8;
  HadamardConfig hadamard;
  GyGranularity gy_granularity = GyGranularity::PerTensor;
  TokenAxis token_axis = TokenAxis::ContractedL;
  Rounding gy_rounding = Rounding::PseudoStochastic;
  Rounding x_rounding = Rounding::Nearest;

  /// Full-precision backward on both paths.
  static BackwardConfig fp();
  /// Default HOT configuration: HT + INT4 on g_x, HLA + INT8 on g_w.
  static BackwardConfig hot();

  void validate() const;
  bool operator==(const BackwardConfig&) const = default;
};

std::string to_string(GxMode m);
std::string to_string(GwMode m);
std::string to_string(GyGranularity g);
/// Inverse of to_string; throws ConfigError for unknown names.
GxMode parse_gx_mode(const std::string& s);
GwMode parse_gw_mode(const std::string& s);
GyGranularity parse_gy_granularity(const std::string& s);

struct LoraAdapter {
  Matrix a;  // O × rank
  Matrix b;  // rank × I
  bool frozen_base = true;
};

struct LinearLayer {
  Matrix weight;  // O × I
  std::string id;
  std::optional<LoraAdapter> lora;

  std::size_t out_features() const noexcept { return weight.rows(); }
  std::size_t in_features() const noexcept { return weight.cols(); }
};

struct GradPair {
  Matrix gx;  // L × I
  Matrix gw;  // O × I
};

/// y = x·wᵀ (+ (x·Bᵀ)·Aᵀ with an adapter), always in full precision.
Matrix forward(const LinearLayer& layer, const Matrix& x);

GradPair fp_backward(const Matrix& gy, const Matrix& x, const Matrix& w);

/// g_x for any GxMode; w is O × I.
Matrix hot_gx(const Matrix& gy, const Matrix& w, const BackwardConfig& cfg);

/// x after the forward-time part of the g_w path: reduced along L, and
/// INT8-quantized when the mode quantizes.
struct ReducedActivation {
  std::size_t original_L = 0;
  std::variant<Matrix, QuantTensor> payload;
};

/// Forward-time half of the low-rank g_w path. Requires an HLA gw mode.
ReducedActivation reduce_activation(const Matrix& x, const BackwardConfig& cfg);
/// Backward-time half of the low-rank g_w path.
Matrix hot_gw_from_reduced(const Matrix& gy, const ReducedActivation& x, const BackwardConfig& cfg);
/// g_w for any GwMode.
Matrix hot_gw(const Matrix& gy, const Matrix& x, const BackwardConfig& cfg);

/// Both gradients with each path computed by its own mode.
GradPair hot_backward(const Matrix& gy, const Matrix& x, const Matrix& w, const BackwardConfig& cfg);

/// Single-path variant used by the sensitivity study: rejects configs where
/// both paths are approximated.
GradPair analysis_backward(const Matrix& gy, const Matrix& x, const Matrix& w, const BackwardConfig& cfg);

struct LoraGrads {
  Matrix gx;
  Matrix ga;                 // O × rank
  Matrix gb;                 // rank × I
  std::optional<Matrix> gw;  // only for a trainable base
};

/// Frozen-base path through hot_gx; adapter gradients in full precision.
LoraGrads lora_backward(const LinearLayer& layer, const Matrix& gy, const Matrix& x, const BackwardConfig& cfg);

}  // namespace hot
