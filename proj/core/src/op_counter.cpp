// SPDX-License-Identifier: Apache-2.0
#include "hot/op_counter.hpp"

namespace hot {
namespace {
thread_local ScopedOpCount* g_active = nullptr;
}

OpCounts& OpCounts::operator+=(const OpCounts& o) noexcept {
  butterfly_addsub += o.butterfly_addsub;
  normalize_muls += o.normalize_muls;
  quantized_elements += o.quantized_elements;
  dequantized_elements += o.dequantized_elements;
  saturated_elements += o.saturated_elements;
  return *this;
}

ScopedOpCount::ScopedOpCount() : previous_(g_active) { g_active = this; }

ScopedOpCount::~ScopedOpCount() {
  g_active = previous_;
  if (previous_ != nullptr) previous_->counts_ += counts_;
}

namespace detail {
OpCounts* active_op_counts() noexcept {
  return g_active == nullptr ? nullptr : const_cast<OpCounts*>(&g_active->counts());
}
}  // namespace detail

}  // namespace hot
