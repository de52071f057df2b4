// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON builders shared by the report writers. Keys keep insertion order so
// reports are stable across runs.

#include <nlohmann/json.hpp>

#include "hot/cost.hpp"
#include "hot/lqs.hpp"

namespace hot::detail {

using Json = nlohmann::ordered_json;

inline Json to_json(const OverheadFlops& f) {
  Json j;
  j["gx"] = f.gx;
  j["gw"] = f.gw;
  j["dequant"] = f.dequant;
  j["total"] = f.total();
  return j;
}

inline Json to_json(const CostReport& rep) {
  Json j;
  j["bits"] = Json{{"forward", rep.bits.forward}, {"gx", rep.bits.gx}, {"gw", rep.bits.gw}};
  Json layers = Json::array();
  for (const auto& l : rep.layers) {
    Json e;
    e["name"] = l.name;
    e["L"] = l.dims.L;
    e["O"] = l.dims.O;
    e["I"] = l.dims.I;
    e["tile"] = l.dims.tile;
    e["rank"] = l.dims.rank;
    e["vanilla_bp_flops"] = l.vanilla_bp_flops;
    e["overhead_flops"] = to_json(l.overhead);
    e["overhead_ratio"] = l.vanilla_bp_flops == 0.0 ? 0.0 : l.overhead.total() / l.vanilla_bp_flops;
    e["fp_bops"] = l.fp_bops;
    e["hot_bops"] = l.hot_bops;
    e["bops_reduction"] = l.fp_bops == 0.0 ? 0.0 : 1.0 - l.hot_bops / l.fp_bops;
    e["activation_bytes_fp"] = l.activation_bytes_fp;
    e["activation_bytes_abc"] = l.activation_bytes_abc;
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  const CostTotals& t = rep.totals;
  Json tot;
  tot["vanilla_bp_flops"] = t.vanilla_bp_flops;
  tot["gx_overhead_flops"] = t.gx_overhead_flops;
  tot["gw_overhead_flops"] = t.gw_overhead_flops;
  tot["dequant_flops"] = t.dequant_flops;
  tot["overhead_ratio"] = t.overhead_ratio();
  tot["fp_bops"] = t.fp_bops;
  tot["hot_bops"] = t.hot_bops;
  tot["bops_reduction"] = t.bops_reduction();
  tot["activation_bytes_fp"] = t.activation_bytes_fp;
  tot["activation_bytes_abc"] = t.activation_bytes_abc;
  tot["memory_ratio"] = t.memory_ratio();
  j["totals"] = std::move(tot);
  return j;
}

inline Json to_json(const QuantPolicy& p) {
  Json j;
  j["seed"] = p.seed;
  j["batches"] = p.batches;
  j["threshold"] = p.threshold;
  Json entries = Json::object();
  for (const auto& e : p.entries) entries[e.layer_id] = to_string(e.granularity);
  j["entries"] = std::move(entries);
  return j;
}

}  // namespace hot::detail
