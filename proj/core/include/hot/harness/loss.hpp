// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "hot/matrix.hpp"

namespace hot {

struct LossResult {
  double loss = 0.0;      // mean over rows
  Matrix grad;            // d loss / d logits, already divided by the batch size
  std::size_t correct = 0;  // rows whose arg-max equals the label
};

/// Softmax cross-entropy with an FP64 log-sum-exp. Throws DimensionError when
/// label count or values do not fit the logits.
LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels);

std::size_t count_correct(const Matrix& logits, const std::vector<std::size_t>& labels);

}  // namespace hot
