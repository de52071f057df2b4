// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "hot/backward.hpp"
#include "hot/cost.hpp"
#include "hot/op_counter.hpp"
#include "hot/rng.hpp"
#include "oracles.hpp"

namespace hot {
namespace {

TEST(Cost, VanillaFlopsOfReferenceLayer) {
  const LayerDims d{49, 448, 1792};
  EXPECT_DOUBLE_EQ(vanilla_bp_flops(d), 157351936.0);
}

TEST(Cost, OverheadRatioOfReferenceLayer) {
  const LayerDims d{49, 448, 1792};
  const double ratio = overhead_flops(d).total() / vanilla_bp_flops(d);
  EXPECT_NEAR(ratio, 0.07, 0.005);
}

TEST(Cost, OverheadMatchesCountingOracle) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = std::size_t{1} << (1 + rng.below(6));
    const std::size_t r = 1 + rng.below(n);
    const LayerDims d{n * (1 + rng.below(40)), n * (1 + rng.below(40)), n * (1 + rng.below(40)), n, r};
    const OverheadFlops got = overhead_flops(d);
    const oracle::CountedOverhead ref = oracle::count_overhead(d.L, d.O, d.I, n, r);
    EXPECT_DOUBLE_EQ(got.gx, ref.gx);
    EXPECT_DOUBLE_EQ(got.gw, ref.gw);
    EXPECT_DOUBLE_EQ(got.dequant, ref.dequant);
  }
}

TEST(Cost, ZeroRankDropsReducedTerms) {
  const LayerDims d{64, 32, 16, 16, 0};
  const OverheadFlops f = overhead_flops(d);
  EXPECT_DOUBLE_EQ(f.gw, 2.0 * 64 * 16 * 4 + 2.0 * 64 * 32 * 4);
}

TEST(Cost, InvalidDimsThrow) {
  EXPECT_THROW(overhead_flops(LayerDims{16, 16, 16, 12, 4}), std::invalid_argument);
  EXPECT_THROW(overhead_flops(LayerDims{16, 16, 16, 16, 17}), std::invalid_argument);
}

TEST(Bops, FullPrecisionHasNoReduction) {
  const Bops b = bops(LayerDims{64, 64, 64, 16, 16}, PathBits{32, 32, 32});
  EXPECT_DOUBLE_EQ(b.hot, b.fp);
  EXPECT_DOUBLE_EQ(b.reduction, 0.0);
}

TEST(Bops, FewerBitsNeverCostMore) {
  const LayerDims d{197, 768, 768};
  const double int4 = bops(d, PathBits{32, 4, 8}).hot;
  const double int8 = bops(d, PathBits{32, 8, 8}).hot;
  const double fp_gw = bops(d, PathBits{32, 4, 32}).hot;
  EXPECT_LT(int4, int8);
  EXPECT_LT(int4, fp_gw);
  EXPECT_GT(bops(d, PathBits{32, 4, 8}).reduction, 0.0);
}

TEST(Bops, HandComputedLayer) {
  const LayerDims d{16, 16, 16, 16, 8};
  const double macs = 4096.0;
  const OverheadFlops o = overhead_flops(d);
  const double overhead = o.gx + 2.0 * 16 * 16 + o.gw + 2.0 * 16 * 16;
  const double expected = macs * 1024 + macs * 16 + macs / 2 * 64 + overhead * 32;
  const Bops b = bops(d, PathBits{32, 4, 8});
  EXPECT_DOUBLE_EQ(b.fp, 3 * macs * 1024);
  EXPECT_DOUBLE_EQ(b.hot, expected);
}

TEST(Bops, VitBReductionInRange) {
  const CostReport rep = cost_report(vit_b_layer_dims(), PathBits{32, 4, 8});
  ASSERT_EQ(rep.layers.size(), 4u);
  EXPECT_GE(rep.totals.bops_reduction(), 0.60);
  EXPECT_LE(rep.totals.bops_reduction(), 0.70);
}

TEST(CostReport, TotalsSumLayers) {
  const auto dims = reference_layer_dims();
  const CostReport rep = cost_report(dims, PathBits{32, 4, 8});
  double vanilla = 0.0;
  double overhead = 0.0;
  for (const auto& n : dims) {
    vanilla += vanilla_bp_flops(n.dims);
    overhead += overhead_flops(n.dims).total();
  }
  EXPECT_DOUBLE_EQ(rep.totals.vanilla_bp_flops, vanilla);
  EXPECT_NEAR(rep.totals.overhead_ratio(), overhead / vanilla, 1e-12);
  EXPECT_EQ(rep.layers.size(), dims.size());
}

TEST(MemoryReport, RatioNearOneEighthForAlignedShapes) {
  const CostReport rep = memory_report({{"fc0", 256}, {"fc1", 768}}, 512, HadamardConfig{});
  EXPECT_GT(rep.totals.memory_ratio(), 0.125);
  EXPECT_LE(rep.totals.memory_ratio(), 0.130);
  EXPECT_DOUBLE_EQ(rep.totals.activation_bytes_fp, 4.0 * 512 * (256 + 768));
}

TEST(MemoryReport, RankScalesBuffer) {
  const double r4 = memory_report({{"a", 64}}, 64, HadamardConfig{16, 4}).totals.memory_ratio();
  const double r8 = memory_report({{"a", 64}}, 64, HadamardConfig{16, 8}).totals.memory_ratio();
  EXPECT_LT(r4, r8);
}

TEST(OpCount, KernelWorkTracksFormula) {
  Rng rng(2);
  const LayerDims d{64, 128, 96};
  const Matrix gy = random_matrix(rng, d.L, d.O, Normal{});
  const Matrix x = random_matrix(rng, d.L, d.I, Normal{});
  const Matrix w = random_matrix(rng, d.O, d.I, Normal{});
  ScopedOpCount count;
  hot_backward(gy, x, w, BackwardConfig::hot());
  const double measured = count.counts().model_flops();
  const double model = overhead_flops(d).total();
  EXPECT_NEAR(measured / model, 1.0, 0.05);
}

}  // namespace
}  // namespace hot
