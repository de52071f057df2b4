// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hot/backward.hpp"
#include "hot/harness/layers.hpp"
#include "hot/harness/optim.hpp"

namespace hot {

/// Backward settings that may be overridden per layer in a `[layer.<id>]` section.
struct LayerSettings {
  std::size_t tile = 16;
  std::size_t rank = 8;
  std::string gx_bits = "4";   // 4 | 8 | 32 | inf
  std::string gw_bits = "8";   // 4 | 8 | 32 | inf
  std::string gw_granularity = "per_tensor";
  std::string token_axis = "contracted_l";
  std::string gx_mode;  // explicit mode name; overrides gx_bits when set
  std::string gw_mode;  // explicit mode name; overrides gw_bits when set

  BackwardConfig to_backward_config() const;
};

/// Resolved run configuration. Keys in a config file are `key = value`
/// lines; `#` starts a comment; `[layer.<id>]` opens a per-layer section.
struct RunConfig {
  // model
  std::string model = "mlp";  // mlp | lora_mlp | transformer
  std::vector<std::size_t> dims{32, 64, 2};
  std::size_t lora_rank = 4;
  std::size_t tokens = 16;
  std::size_t model_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t blocks = 1;

  // data
  std::string dataset = "spirals";  // spirals | tokens | idx
  std::size_t samples = 512;
  double noise = 0.0;
  double feature_sigma = 1.0;
  std::string idx_images;
  std::string idx_labels;

  // training
  std::uint64_t seed = 1;
  std::string mode = "hot";  // hot | fp
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 0.01;
  std::string optimizer = "adamw";  // adamw | sgd
  double weight_decay = 0.0;
  std::string schedule = "cosine";  // cosine | constant
  long warmup_epochs = -1;          // -1: 10% of epochs, or 0 for LoRA fine-tuning
  bool compress_activations = true;
  std::string spill_dir;

  // quantizer selection
  std::string policy_path;
  std::size_t calibration_batches = 4;
  double lqs_threshold = 0.5;

  // analysis
  std::size_t study_layers = 8;
  std::size_t study_width = 512;
  std::size_t study_grid = 8;
  std::size_t study_seeds = 10;

  LayerSettings defaults;
  std::map<std::string, LayerSettings> layers;

  BackwardConfig backward_config_for(const std::string& layer_id) const;
  std::size_t resolved_warmup_epochs() const;
  OptimizerKind optimizer_kind() const;
  ExecMode exec_mode() const;
  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Throws ConfigError naming the line for unknown keys or malformed values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Ordered key/value view of every resolved setting, used to embed the
/// configuration in reports.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

}  // namespace hot
