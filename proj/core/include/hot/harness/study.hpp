// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hot/backward.hpp"
#include "hot/harness/model.hpp"
#include "hot/matrix.hpp"

namespace hot {

/// One backward variant under study, approximating one path at a time.
struct StudyScheme {
  std::string name;
  BackwardConfig config;
};

struct LayerError {
  std::string layer_id;
  std::size_t depth_from_output = 0;  // 0 for the last linear layer
  double gx_mse = 0.0;
  double gw_mse = 0.0;
  double gx_relative = 0.0;  // ‖approx − ref‖² / ‖ref‖²
  double gw_relative = 0.0;
};

struct SchemeErrors {
  std::string scheme;
  std::vector<LayerError> layers;  // input side first
};

/// Backpropagates `gy_out` through a chain of Linear and Relu modules once
/// exactly and once per scheme, and records per-layer gradient MSE against
/// the exact chain. Errors on the g_x path propagate to earlier layers; the
/// g_w of each layer uses the approximate upstream gradient of its scheme.
/// Throws std::invalid_argument for fewer than two linear layers, LoRA layers,
/// other module types, or schemes approximating both paths.
std::vector<SchemeErrors> layerwise_error_study(Model& model, const Matrix& x, const Matrix& gy_out,
                                                const std::vector<StudyScheme>& schemes);

/// Spearman rank correlation with averaged ranks for ties. Returns 0 when
/// either input is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// grid×grid tokens of `dim` smooth features (a few low-frequency cosines
/// plus small noise). Tokens are ordered tile-major: each run of 16 rows is
/// one 4×4 patch, so a 16-row Hadamard tile sees a 2-D neighbourhood.
/// `grid` must be a multiple of 4.
Matrix make_smooth_tokens(std::size_t grid, std::size_t dim, std::uint64_t seed);

struct DepthStudyOptions {
  std::size_t layers = 8;
  std::size_t width = 512;
  std::size_t grid = 8;
  std::size_t seeds = 10;
  std::uint64_t base_seed = 1;
  HadamardConfig hadamard;
};

/// Schemes compared by the depth study: InternalHLA on g_x, and HQ INT4,
/// HLA FP, HLA INT8 on g_w.
std::vector<StudyScheme> depth_study_schemes(const HadamardConfig& hadamard);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::vector<SchemeErrors> schemes;
  double gx_depth_spearman = 0.0;  // InternalHLA g_x MSE vs depth from output
};

struct DepthStudyResult {
  DepthStudyOptions options;
  std::vector<SeedOutcome> seeds;
  double median_gx_depth_spearman = 0.0;
  // Median over seeds of the per-seed median g_w MSE across layers.
  double median_gw_mse_hq_int4 = 0.0;
  double median_gw_mse_hla_fp = 0.0;
  double median_gw_mse_hla_int8 = 0.0;
};

/// Random-init ReLU MLPs of `layers` square linear layers on smooth token
/// batches with N(0, 1) upstream gradients, one model per seed.
DepthStudyResult run_depth_study(const DepthStudyOptions& opts);

double median(std::vector<double> v);

std::string depth_study_json(const DepthStudyResult& r);
/// Aligned text rendering of the per-layer medians and the summary values.
std::string depth_study_text(const DepthStudyResult& r);

}  // namespace hot
