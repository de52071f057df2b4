// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "hot/harness/layers.hpp"
#include "hot/matrix.hpp"

namespace hot {

/// p ← p − lr·g. Throws DimensionError on shape mismatch and TrainingError on
/// a non-finite gradient.
void sgd_step(Matrix& p, const Matrix& g, double lr);

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamState {
  Matrix m;
  Matrix v;
  std::size_t step = 0;
};

/// Decoupled weight decay:
///   p ← p − lr·wd·p;  m ← β1·m + (1−β1)·g;  v ← β2·v + (1−β2)·g²
///   p ← p − lr · (m / (1−β1^t)) / (sqrt(v / (1−β2^t)) + eps)
void adamw_step(Matrix& p, const Matrix& g, AdamState& state, double lr, const AdamWHyper& h);

/// Half-cosine decay from `base` at step 0 to `floor` at step `total`.
double cosine_lr(double base, std::size_t step, std::size_t total, double floor = 0.0);

enum class OptimizerKind { Sgd, AdamW };

/// Applies one update to a fixed parameter list, keeping per-parameter state.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, AdamWHyper hyper = {}) : kind_(kind), hyper_(hyper) {}
  void step(const std::vector<ParamRef>& params, double lr);

 private:
  OptimizerKind kind_;
  AdamWHyper hyper_;
  std::vector<AdamState> states_;
};

}  // namespace hot
