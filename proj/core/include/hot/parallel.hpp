// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace hot {

/// Worker count, capped by the HOT_THREADS environment variable (default 1).
std::size_t worker_count();

/// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on each,
/// possibly on several threads. Callers must write disjoint outputs per index
/// so results do not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace hot
