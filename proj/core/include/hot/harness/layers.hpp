// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hot/abc.hpp"
#include "hot/backward.hpp"
#include "hot/matrix.hpp"

namespace hot {

enum class ExecMode { FpOracle, Hot };

std::string to_string(ExecMode m);
ExecMode parse_exec_mode(const std::string& s);

/// Per-step switches shared by every module of a model.
struct StepContext {
  ExecMode mode = ExecMode::FpOracle;
  bool int8_warmup = false;  // every quantized g_x path runs at INT8
  bool compress_activations = true;  // store x compressed at forward, else compress at backward
  std::optional<std::filesystem::path> spill_dir;  // write compressed buffers to disk between passes
  bool capture_gy = false;   // record each linear layer's upstream gradient
};

/// A trainable tensor and its gradient slot.
struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
  Matrix* grad = nullptr;
};

class Linear;

class Module {
 public:
  virtual ~Module() = default;
  virtual std::string name() const = 0;
  virtual Matrix forward(const Matrix& x, const StepContext& ctx) = 0;
  /// Consumes the state saved by the last forward. `need_input_grad` is false
  /// for the first module, which lets linear layers skip the g_x GEMM.
  virtual Matrix backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) = 0;
  virtual void collect_params(std::vector<ParamRef>&) {}
  virtual void collect_linears(std::vector<Linear*>&) {}
};

/// Linear layer y = x·wᵀ (+ LoRA term) whose backward follows its
/// BackwardConfig in Hot mode and plain FP otherwise.
class Linear : public Module {
 public:
  Linear(LinearLayer layer, BackwardConfig cfg);

  std::string name() const override { return layer_.id; }
  Matrix forward(const Matrix& x, const StepContext& ctx) override;
  Matrix backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) override;
  void collect_params(std::vector<ParamRef>& out) override;
  void collect_linears(std::vector<Linear*>& out) override { out.push_back(this); }

  const LinearLayer& layer() const noexcept { return layer_; }
  LinearLayer& layer() noexcept { return layer_; }
  const BackwardConfig& config() const noexcept { return cfg_; }
  void set_config(const BackwardConfig& cfg);

  /// Config actually used for a step (FP in oracle mode, INT8 g_x during warmup).
  BackwardConfig effective_config(const StepContext& ctx) const;

  /// Bytes held between forward and backward by the last forward call.
  std::size_t stored_activation_bytes() const noexcept { return stored_bytes_; }
  /// Row count (L) of the last forward input.
  std::size_t last_input_rows() const noexcept { return last_rows_; }
  const std::vector<Matrix>& captured_gy() const noexcept { return captured_gy_; }
  void clear_captured() { captured_gy_.clear(); }

  const Matrix& grad_weight() const noexcept { return grad_w_; }

 private:
  LinearLayer layer_;
  BackwardConfig cfg_;
  Matrix grad_w_;
  Matrix grad_a_;
  Matrix grad_b_;

  std::optional<Matrix> saved_x_;
  std::optional<CompressedActivation> saved_compressed_;
  std::optional<std::filesystem::path> spilled_;
  std::size_t stored_bytes_ = 0;
  std::size_t last_rows_ = 0;
  std::vector<Matrix> captured_gy_;
};

class Relu : public Module {
 public:
  explicit Relu(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Matrix forward(const Matrix& x, const StepContext& ctx) override;
  Matrix backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) override;

 private:
  std::string name_;
  Matrix mask_;
};

/// Exact GELU, x·Φ(x).
class Gelu : public Module {
 public:
  explicit Gelu(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Matrix forward(const Matrix& x, const StepContext& ctx) override;
  Matrix backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) override;

 private:
  std::string name_;
  Matrix x_;
};

/// Averages each group of `tokens` consecutive rows into one row.
class MeanPool : public Module {
 public:
  MeanPool(std::string name, std::size_t tokens);
  std::string name() const override { return name_; }
  Matrix forward(const Matrix& x, const StepContext& ctx) override;
  Matrix backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) override;

 private:
  std::string name_;
  std::size_t tokens_;
};

/// Pre-norm-free block over sequences of `tokens` rows:
///   h = x + proj(attention(qkv(x)));  out = h + fc2(gelu(fc1(h)))
/// Single-head softmax attention runs in full precision; the four linear
/// layers follow their own backward configs.
class TransformerBlock : public Module {
 public:
  TransformerBlock(std::string name, std::size_t tokens, std::unique_ptr<Linear> qkv, std::unique_ptr<Linear> proj,
                   std::unique_ptr<Linear> fc1, std::unique_ptr<Linear> fc2);

  std::string name() const override { return name_; }
  Matrix forward(const Matrix& x, const StepContext& ctx) override;
  Matrix backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) override;
  void collect_params(std::vector<ParamRef>& out) override;
  void collect_linears(std::vector<Linear*>& out) override;

 private:
  std::string name_;
  std::size_t tokens_;
  std::unique_ptr<Linear> qkv_, proj_, fc1_, fc2_;
  Gelu gelu_;
  Matrix q_, k_, v_;
  std::vector<Matrix> attn_;  // per sequence, tokens × tokens softmax weights
};

}  // namespace hot
