// SPDX-License-Identifier: Apache-2.0
#include "hot/cost.hpp"

#include <stdexcept>

#include "hot/abc.hpp"

namespace hot {
namespace {

double log2_tile(const LayerDims& d) { return static_cast<double>(log2_exact(d.tile)); }

bool gw_approximated(const LayerDims& d, const PathBits& b) { return b.gw < 32 || d.rank < d.tile; }

std::vector<NamedDims> with_config(std::vector<NamedDims> v, std::size_t tile, std::size_t rank) {
  for (auto& n : v) {
    n.dims.tile = tile;
    n.dims.rank = rank;
  }
  return v;
}

}  // namespace

void LayerDims::validate() const {
  if (!is_power_of_two(tile)) throw std::invalid_argument("LayerDims: tile must be a power of two");
  if (rank > tile) throw std::invalid_argument("LayerDims: rank exceeds tile");
}

double vanilla_bp_flops(const LayerDims& d) {
  return 4.0 * static_cast<double>(d.L) * static_cast<double>(d.I) * static_cast<double>(d.O);
}

OverheadFlops overhead_flops(const LayerDims& d) {
  d.validate();
  const double L = static_cast<double>(d.L);
  const double O = static_cast<double>(d.O);
  const double I = static_cast<double>(d.I);
  const double lg = log2_tile(d);
  const double reduced_L = L * static_cast<double>(d.rank) / static_cast<double>(d.tile);
  OverheadFlops f;
  f.gx = 2 * L * O * lg + 2 * I * O * lg + 2 * L * O + 2 * I * O;
  f.gw = 2 * L * I * lg + 2 * L * O * lg + 2 * I * reduced_L + 2 * O * reduced_L;
  f.dequant = 2 * I * O + 2 * L * I;
  return f;
}

Bops bops(const LayerDims& d, const PathBits& b) {
  d.validate();
  const double macs = static_cast<double>(d.L) * static_cast<double>(d.I) * static_cast<double>(d.O);
  const double reduced_macs = macs * static_cast<double>(d.rank) / static_cast<double>(d.tile);
  const auto sq = [](int bits) { return static_cast<double>(bits) * bits; };
  Bops r;
  r.fp = 3.0 * macs * 1024.0;

  const OverheadFlops o = overhead_flops(d);
  const double I = static_cast<double>(d.I);
  const double L = static_cast<double>(d.L);
  const double O = static_cast<double>(d.O);
  double overhead = 0.0;
  if (b.gx < 32) overhead += o.gx + 2 * L * I;
  if (gw_approximated(d, b)) overhead += o.gw + (b.gw < 32 ? 2 * I * O : 0.0);

  const double gw_macs = d.rank < d.tile ? reduced_macs : macs;
  r.hot = macs * sq(b.forward) + macs * sq(b.gx) + gw_macs * sq(b.gw) + overhead * 32.0;
  r.reduction = r.fp == 0.0 ? 0.0 : 1.0 - r.hot / r.fp;
  return r;
}

std::vector<NamedDims> reference_layer_dims(std::size_t tile, std::size_t rank) {
  return with_config(
      {
          {"resnet50.layer1.conv1", {3136, 64, 256}},
          {"resnet50.layer1.conv2", {3136, 64, 576}},
          {"resnet50.layer2.conv1", {784, 128, 512}},
          {"resnet50.layer2.conv2", {784, 128, 1152}},
          {"resnet50.layer3.conv2", {196, 256, 2304}},
          {"resnet50.layer4.conv2", {49, 512, 4608}},
          {"vit_b.qkv", {197, 2304, 768}},
          {"vit_b.proj", {197, 768, 768}},
          {"vit_b.fc1", {197, 3072, 768}},
          {"vit_b.fc2", {197, 768, 3072}},
          {"efficientformer_l7.stages.0.fc1", {3136, 384, 96}},
          {"efficientformer_l7.stages.1.fc1", {784, 768, 192}},
          {"efficientformer_l7.stages.2.fc1", {196, 1536, 384}},
          {"efficientformer_l7.stages.3.qkv", {49, 1536, 768}},
          {"efficientformer_l7.stages.3.proj", {49, 768, 1024}},
          {"efficientformer_l7.stages.3.fc1", {49, 3072, 768}},
      },
      tile, rank);
}

std::vector<NamedDims> vit_b_layer_dims(std::size_t tile, std::size_t rank) {
  std::vector<NamedDims> out;
  for (auto& n : reference_layer_dims(tile, rank))
    if (n.name.rfind("vit_b.", 0) == 0) out.push_back(std::move(n));
  return out;
}

double CostTotals::overhead_ratio() const noexcept {
  return vanilla_bp_flops == 0.0 ? 0.0
                                 : (gx_overhead_flops + gw_overhead_flops + dequant_flops) / vanilla_bp_flops;
}

double CostTotals::bops_reduction() const noexcept { return fp_bops == 0.0 ? 0.0 : 1.0 - hot_bops / fp_bops; }

double CostTotals::memory_ratio() const noexcept {
  return activation_bytes_fp == 0.0 ? 0.0 : activation_bytes_abc / activation_bytes_fp;
}

CostReport cost_report(const std::vector<NamedDims>& layers, const PathBits& bits) {
  CostReport rep;
  rep.bits = bits;
  for (const auto& n : layers) {
    LayerCost c;
    c.name = n.name;
    c.dims = n.dims;
    c.vanilla_bp_flops = vanilla_bp_flops(n.dims);
    c.overhead = overhead_flops(n.dims);
    const Bops b = bops(n.dims, bits);
    c.fp_bops = b.fp;
    c.hot_bops = b.hot;
    c.activation_bytes_fp = 4.0 * static_cast<double>(n.dims.L) * static_cast<double>(n.dims.I);
    if (n.dims.rank > 0) {
      c.activation_bytes_abc = static_cast<double>(
          abc_bytes(n.dims.L, n.dims.I, HadamardConfig{n.dims.tile, n.dims.rank, LowpassOrdering::LpL1}));
    }
    rep.totals.vanilla_bp_flops += c.vanilla_bp_flops;
    rep.totals.gx_overhead_flops += c.overhead.gx;
    rep.totals.gw_overhead_flops += c.overhead.gw;
    rep.totals.dequant_flops += c.overhead.dequant;
    rep.totals.fp_bops += c.fp_bops;
    rep.totals.hot_bops += c.hot_bops;
    rep.totals.activation_bytes_fp += c.activation_bytes_fp;
    rep.totals.activation_bytes_abc += c.activation_bytes_abc;
    rep.layers.push_back(std::move(c));
  }
  return rep;
}

CostReport memory_report(const std::vector<ActivationShape>& layers, std::size_t rows, const HadamardConfig& cfg) {
  CostReport rep;
  for (const auto& s : layers) {
    LayerCost c;
    c.name = s.name;
    c.dims = LayerDims{rows, 0, s.in_features, cfg.tile, cfg.rank};
    c.activation_bytes_fp = 4.0 * static_cast<double>(rows) * static_cast<double>(s.in_features);
    c.activation_bytes_abc = static_cast<double>(abc_bytes(rows, s.in_features, cfg));
    rep.totals.activation_bytes_fp += c.activation_bytes_fp;
    rep.totals.activation_bytes_abc += c.activation_bytes_abc;
    rep.layers.push_back(std::move(c));
  }
  return rep;
}

}  // namespace hot
