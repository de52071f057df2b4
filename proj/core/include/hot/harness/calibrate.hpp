// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

#include "hot/harness/data.hpp"
#include "hot/harness/model.hpp"
#include "hot/lqs.hpp"

namespace hot {

/// Runs `batches` full-precision forward/backward passes over batches drawn
/// from `data` by `seed`, records each linear layer's upstream gradient, and
/// applies the per-layer threshold rule. Model weights are left unchanged.
CalibrationResult calibrate(Model& model, const Dataset& data, std::size_t batches, std::size_t batch_size,
                            double threshold, std::uint64_t seed);

}  // namespace hot
