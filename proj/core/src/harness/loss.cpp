// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/loss.hpp"

#include <algorithm>
#include <cmath>

#include "hot/errors.hpp"

namespace hot {
namespace {

void check_labels(const Matrix& logits, const std::vector<std::size_t>& labels) {
  if (labels.size() != logits.rows()) {
    throw DimensionError("loss: " + std::to_string(labels.size()) + " labels for logits " + logits.shape_string());
  }
  for (std::size_t y : labels)
    if (y >= logits.cols()) throw DimensionError("loss: label " + std::to_string(y) + " out of range");
}

std::size_t argmax(std::span<const float> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels) {
  check_labels(logits, labels);
  LossResult r;
  r.grad = Matrix(logits.rows(), logits.cols());
  if (logits.rows() == 0) return r;
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (float v : row) sum += std::exp(static_cast<double>(v) - mx);
    const double lse = mx + std::log(sum);
    total += lse - row[labels[i]];
    auto g = r.grad.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double p = std::exp(static_cast<double>(row[c]) - lse);
      g[c] = static_cast<float>((p - (c == labels[i] ? 1.0 : 0.0)) * inv_batch);
    }
    if (argmax(row) == labels[i]) ++r.correct;
  }
  r.loss = total * inv_batch;
  return r;
}

std::size_t count_correct(const Matrix& logits, const std::vector<std::size_t>& labels) {
  check_labels(logits, labels);
  std::size_t n = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i)
    if (argmax(logits.row(i)) == labels[i]) ++n;
  return n;
}

}  // namespace hot
