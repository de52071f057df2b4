// SPDX-License-Identifier: Apache-2.0
#include "hot/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace hot {

std::size_t worker_count() {
  static const std::size_t count = [] {
    const char* env = std::getenv("HOT_THREADS");
    if (env == nullptr || *env == '\0') return std::size_t{1};
    try {
      const long v = std::stol(env);
      return v < 1 ? std::size_t{1} : static_cast<std::size_t>(v);
    } catch (...) {
      return std::size_t{1};
    }
  }();
  return count;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  constexpr std::size_t kMinChunk = 8;
  const std::size_t workers = std::min(worker_count(), (n + kMinChunk - 1) / kMinChunk);
  if (workers <= 1) {
    if (n > 0) body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(0, std::min(n, chunk));
  for (auto& t : threads) t.join();
}

}  // namespace hot
