// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hot/harness/layers.hpp"
#include "hot/lqs.hpp"

namespace hot {

class Rng;

/// Ordered chain of modules.
class Model {
 public:
  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  void add(std::unique_ptr<Module> m);

  Matrix forward(const Matrix& x, const StepContext& ctx);
  /// Backpropagates `gy` (gradient of the loss w.r.t. the last output) through
  /// every module; the input gradient of the first module is not computed.
  void backward(const Matrix& gy, const StepContext& ctx);

  std::vector<ParamRef> params();
  std::vector<Linear*> linears();
  std::vector<std::string> linear_ids();
  std::size_t size() const noexcept { return modules_.size(); }
  Module& module(std::size_t i) { return *modules_.at(i); }

  /// Sets every linear layer's g_y granularity from `policy`; the policy must
  /// cover exactly the model's linear layers.
  void apply_policy(const QuantPolicy& policy);
  /// Replaces the backward config of every linear layer.
  void set_backward_config(const BackwardConfig& cfg);

 private:
  std::vector<std::unique_ptr<Module>> modules_;
};

/// He-normal weights (std sqrt(2 / fan_in)).
Matrix he_normal(Rng& rng, std::size_t out, std::size_t in);

/// Linear layers of widths dims[0] → dims[1] → … with ReLU between them.
/// Layer ids are "fc0", "fc1", ….
Model build_mlp(const std::vector<std::size_t>& dims, Rng& rng, const BackwardConfig& cfg);

/// Same shape as build_mlp, every linear layer carrying a LoRA adapter of
/// rank `lora_rank` over a frozen base. A starts at zero, so the initial
/// function equals the base MLP.
Model build_lora_mlp(const std::vector<std::size_t>& dims, std::size_t lora_rank, Rng& rng, const BackwardConfig& cfg);

struct TransformerShape {
  std::size_t tokens = 16;
  std::size_t input_dim = 16;
  std::size_t model_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t blocks = 1;
  std::size_t classes = 2;
};

/// embed (linear) → blocks → mean over tokens → head (linear).
Model build_transformer(const TransformerShape& shape, Rng& rng, const BackwardConfig& cfg);

}  // namespace hot
