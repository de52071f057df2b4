// SPDX-License-Identifier: Apache-2.0
#pragma once

// Layer-wise quantizer selection: per layer, choose per-token or per-tensor
// INT8 scales for g_y by comparing their quantization errors on calibration data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hot/backward.hpp"
#include "hot/matrix.hpp"

namespace hot {

inline constexpr double kDefaultLqsThreshold = 0.5;
inline constexpr std::size_t kDefaultCalibrationBatches = 4;

struct PolicyEntry {
  std::string layer_id;
  GyGranularity granularity = GyGranularity::PerTensor;
  bool operator==(const PolicyEntry&) const = default;
};

struct QuantPolicy {
  std::vector<PolicyEntry> entries;  // calibration order
  std::uint64_t seed = 0;
  std::size_t batches = 0;
  double threshold = kDefaultLqsThreshold;

  std::optional<GyGranularity> find(const std::string& layer_id) const;
  bool operator==(const QuantPolicy&) const = default;
};

/// Mean squared difference with FP64 accumulation.
double mse(const Matrix& a, const Matrix& b);

struct QuantErrors {
  double per_tensor = 0.0;
  double per_token = 0.0;
};

/// INT8 pseudo-stochastic quantization error of g_y with one scale for the
/// whole tensor versus one scale per token (row).
QuantErrors quantization_errors(const Matrix& gy);

/// PerToken iff (e_tensor − e_token) / e_tensor >= threshold. A zero e_tensor
/// selects PerTensor.
GyGranularity select_quantizer(const QuantErrors& e, double threshold);

struct LayerGradientSamples {
  std::string layer_id;
  std::vector<Matrix> gy;  // one entry per calibration batch
};

struct LayerCalibration {
  std::string layer_id;
  QuantErrors mean_errors;  // averaged over batches
  double relative_gain = 0.0;
  GyGranularity choice = GyGranularity::PerTensor;
};

struct CalibrationResult {
  QuantPolicy policy;
  std::vector<LayerCalibration> layers;
};

/// Averages both errors over batches per layer, then applies the threshold rule.
/// Throws std::invalid_argument on an empty set or a layer without gradients.
CalibrationResult calibrate_from_gradients(const std::vector<LayerGradientSamples>& samples, double threshold,
                                           std::uint64_t seed);

/// Text format: `# seed=N`, `# threshold=X`, `# batches=N`, then one
/// `layer_id=per_token|per_tensor` line per layer.
std::string format_policy(const QuantPolicy& policy);
/// Throws ConfigError with a line number on malformed input, "no entries" for
/// an empty policy, and the offending id for duplicates.
QuantPolicy parse_policy(const std::string& text);
void save_policy(const QuantPolicy& policy, const std::filesystem::path& path);
QuantPolicy load_policy(const std::filesystem::path& path);

/// Throws ConfigError if the policy names a layer not in `layer_ids` or misses one.
void check_policy_covers(const QuantPolicy& policy, const std::vector<std::string>& layer_ids);

}  // namespace hot
