// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/calibrate.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "hot/errors.hpp"
#include "hot/harness/loss.hpp"
#include "hot/rng.hpp"

namespace hot {

CalibrationResult calibrate(Model& model, const Dataset& data, std::size_t batches, std::size_t batch_size,
                            double threshold, std::uint64_t seed) {
  data.validate();
  if (data.size() == 0) throw DataError("cannot calibrate on an empty dataset");
  if (batches == 0 || batch_size == 0) throw std::invalid_argument("calibrate: batches and batch_size must be positive");

  StepContext ctx;
  ctx.mode = ExecMode::FpOracle;
  ctx.capture_gy = true;
  for (Linear* l : model.linears()) l->clear_captured();

  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const std::size_t take = std::min(batch_size, data.size());
  std::size_t pos = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    if (pos + take > order.size()) {
      shuffle(order, rng);
      pos = 0;
    }
    const Dataset batch = subset(data, std::span<const std::size_t>(order).subspan(pos, take));
    pos += take;
    const Matrix logits = model.forward(batch.inputs, ctx);
    model.backward(softmax_cross_entropy(logits, batch.labels).grad, ctx);
  }

  std::vector<LayerGradientSamples> samples;
  for (Linear* l : model.linears()) {
    samples.push_back({l->layer().id, l->captured_gy()});
    l->clear_captured();
  }
  CalibrationResult res = calibrate_from_gradients(samples, threshold, seed);
  res.policy.batches = batches;
  return res;
}

}  // namespace hot
