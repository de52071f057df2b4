// SPDX-License-Identifier: Apache-2.0
#pragma once

// Analytic cost accounting for one linear layer y = x·wᵀ with x: L×I, w: O×I.
// FLOP counts use log n = log2(tile).

#include <cstddef>
#include <string>
#include <vector>

#include "hot/hadamard.hpp"

namespace hot {

struct LayerDims {
  std::size_t L = 0;
  std::size_t O = 0;
  std::size_t I = 0;
  std::size_t tile = 16;
  std::size_t rank = 8;  // 0 is allowed here: it zeroes the rank terms

  void validate() const;
  bool operator==(const LayerDims&) const = default;
};

/// 4·L·I·O: the two backward GEMMs at 2 FLOPs per MAC.
double vanilla_bp_flops(const LayerDims& d);

struct OverheadFlops {
  double gx = 0.0;       // transforms + quantization on the g_x path
  double gw = 0.0;       // transforms + quantization on the g_w path
  double dequant = 0.0;  // rescaling of both integer GEMM outputs
  double total() const noexcept { return gx + gw + dequant; }
};

/// gx = 2LO·log n + 2IO·log n + 2LO + 2IO
/// gw = 2LI·log n + 2LO·log n + 2I·(Lr/n) + 2O·(Lr/n)
/// dequant = 2IO + 2LI
OverheadFlops overhead_flops(const LayerDims& d);

/// Bit widths of the three GEMMs; 32 means full precision.
struct PathBits {
  int forward = 32;
  int gx = 4;
  int gw = 8;
};

struct Bops {
  double fp = 0.0;
  double hot = 0.0;
  double reduction = 0.0;  // 1 − hot/fp
};

/// Bit operations: MACs × (bits_a · bits_b). The full-precision baseline runs
/// all three GEMMs at 32×32. The HOT count runs g_x at gx², g_w on L·r/n rows
/// at gw², and adds the overhead FLOPs of every approximated path at 32 bits each.
Bops bops(const LayerDims& d, const PathBits& bits);

struct NamedDims {
  std::string name;
  LayerDims dims;
};

/// Reference layer shapes (L, O, I) from ResNet-50 (conv as GEMM),
/// ViT-B and EfficientFormer-L7.
std::vector<NamedDims> reference_layer_dims(std::size_t tile = 16, std::size_t rank = 8);
/// The ViT-B subset of reference_layer_dims.
std::vector<NamedDims> vit_b_layer_dims(std::size_t tile = 16, std::size_t rank = 8);

struct LayerCost {
  std::string name;
  LayerDims dims;
  double vanilla_bp_flops = 0.0;
  OverheadFlops overhead;
  double fp_bops = 0.0;
  double hot_bops = 0.0;
  double activation_bytes_fp = 0.0;
  double activation_bytes_abc = 0.0;
};

struct CostTotals {
  double vanilla_bp_flops = 0.0;
  double gx_overhead_flops = 0.0;
  double gw_overhead_flops = 0.0;
  double dequant_flops = 0.0;
  double fp_bops = 0.0;
  double hot_bops = 0.0;
  double activation_bytes_fp = 0.0;
  double activation_bytes_abc = 0.0;

  double overhead_ratio() const noexcept;  // total overhead / vanilla
  double bops_reduction() const noexcept;  // 1 − hot/fp
  double memory_ratio() const noexcept;    // abc / fp activation bytes
};

struct CostReport {
  PathBits bits;
  std::vector<LayerCost> layers;
  CostTotals totals;
};

CostReport cost_report(const std::vector<NamedDims>& layers, const PathBits& bits);

/// Activation-buffer accounting only (FLOP fields left zero): x of each layer
/// is `rows` × I, stored in FP32 versus an INT8 low-rank buffer.
struct ActivationShape {
  std::string name;
  std::size_t in_features = 0;
};
CostReport memory_report(const std::vector<ActivationShape>& layers, std::size_t rows, const HadamardConfig& cfg);

}  // namespace hot
