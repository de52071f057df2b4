// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hot/cost.hpp"
#include "hot/harness/config.hpp"
#include "hot/harness/data.hpp"
#include "hot/harness/model.hpp"
#include "hot/harness/optim.hpp"
#include "hot/lqs.hpp"

namespace hot {

struct TrainOptions {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 0.01;
  OptimizerKind optimizer = OptimizerKind::AdamW;
  AdamWHyper adamw{0.9, 0.999, 1e-8, 0.0};
  bool cosine_schedule = true;
  ExecMode mode = ExecMode::Hot;
  std::uint64_t seed = 1;
  std::size_t warmup_epochs = 0;  // epochs whose quantized g_x paths run at INT8
  bool compress_activations = true;
  std::optional<std::filesystem::path> spill_dir;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean mini-batch loss
  double accuracy = 0.0;  // on the full training set after the epoch
  bool int8_warmup = false;
};

struct LayerRecord {
  std::string id;
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::string gx_mode;
  std::string gw_mode;
  std::string gy_granularity;
  bool lora = false;
  bool frozen_base = false;
  std::size_t activation_bytes = 0;  // held between forward and backward for one batch
};

struct TrainRecord {
  std::uint64_t seed = 0;
  std::string mode;
  std::vector<EpochRecord> epochs;
  std::vector<LayerRecord> layers;
  double final_accuracy = 0.0;
  CostReport cost;
  std::optional<QuantPolicy> policy;
  std::vector<std::pair<std::string, std::string>> config;  // resolved settings, in order
  double wall_clock_seconds = 0.0;  // kept out of the JSON report
};

/// Mini-batch training with softmax cross-entropy. Deterministic per seed in
/// both modes. Throws TrainingError naming the first module or parameter that
/// produced a non-finite value.
TrainRecord train(Model& model, const Dataset& data, const TrainOptions& opts);

/// Fraction of samples whose arg-max prediction matches the label.
double evaluate_accuracy(Model& model, const Dataset& data, std::size_t batch_size);

/// Report document: seed, mode, config, epochs[], layers[], cost, policy,
/// final_accuracy. Keys are emitted in that fixed order.
std::string train_record_json(const TrainRecord& rec);
std::string cost_report_json(const CostReport& rep);

// Building blocks for running a RunConfig end to end.
Dataset make_dataset(const RunConfig& cfg);
Model make_model(const RunConfig& cfg, std::size_t input_dim, std::size_t classes);
TrainOptions make_train_options(const RunConfig& cfg);

/// Builds data and model from `cfg`, applies the policy file if one is named,
/// trains, and fills the config/policy fields of the record.
TrainRecord run_training(const RunConfig& cfg);

}  // namespace hot
