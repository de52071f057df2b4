// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "hot/errors.hpp"
#include "hot/lqs.hpp"
#include "hot/rng.hpp"

namespace hot {
namespace {

Matrix outlier_gradient(Rng& rng, std::size_t L, std::size_t O) {
  Matrix m = random_matrix(rng, L, O, Normal{});
  const std::size_t row = rng.below(L);
  for (std::size_t j = 0; j < O; ++j) m(row, j) *= 100.0f;
  return m;
}

TEST(Lqs, MseUsesMeanOfSquares) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{1, 0}, {3, 5}});
  EXPECT_DOUBLE_EQ(mse(a, b), 5.0 / 4.0);
  EXPECT_THROW(mse(a, Matrix(1, 2)), DimensionError);
}

TEST(Lqs, OutlierRowSelectsPerToken) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const QuantErrors e = quantization_errors(outlier_gradient(rng, 64, 128));
    EXPECT_LT(e.per_token, e.per_tensor);
    EXPECT_EQ(select_quantizer(e, kDefaultLqsThreshold), GyGranularity::PerToken) << "seed " << seed;
  }
}

TEST(Lqs, IidGradientGainIsModerate) {
  Rng rng(1);
  const QuantErrors e = quantization_errors(random_matrix(rng, 196, 768, Normal{}));
  const double gain = (e.per_tensor - e.per_token) / e.per_tensor;
  EXPECT_GT(gain, 0.2);
  EXPECT_LT(gain, 0.7);
}

TEST(Lqs, ThresholdBoundaries) {
  EXPECT_EQ(select_quantizer({1.0, 1.0}, 0.5), GyGranularity::PerTensor);
  EXPECT_EQ(select_quantizer({1.0, 0.5}, 0.5), GyGranularity::PerToken);
  EXPECT_EQ(select_quantizer({1.0, 0.5000001}, 0.5), GyGranularity::PerTensor);
  EXPECT_EQ(select_quantizer({0.0, 0.0}, 0.5), GyGranularity::PerTensor);
  EXPECT_EQ(select_quantizer({1.0, 2.0}, 0.0), GyGranularity::PerTensor);
  EXPECT_EQ(select_quantizer({1.0, 1.0}, 0.0), GyGranularity::PerToken);
}

TEST(Lqs, RaisingThresholdNeverAddsPerToken) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const QuantErrors e{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const double lo = rng.uniform(0.0, 1.0);
    const double hi = lo + rng.uniform(0.0, 1.0);
    if (select_quantizer(e, lo) == GyGranularity::PerTensor)
      EXPECT_EQ(select_quantizer(e, hi), GyGranularity::PerTensor);
  }
}

TEST(Lqs, CalibrationAveragesOverBatches) {
  Rng rng(3);
  std::vector<LayerGradientSamples> samples(2);
  samples[0].layer_id = "fc0";
  samples[1].layer_id = "fc1";
  for (int b = 0; b < 3; ++b) {
    samples[0].gy.push_back(outlier_gradient(rng, 32, 64));
    samples[1].gy.push_back(random_matrix(rng, 32, 64, Normal{}));
  }
  const CalibrationResult r = calibrate_from_gradients(samples, 0.5, 7);
  EXPECT_EQ(r.policy.seed, 7u);
  EXPECT_EQ(r.policy.batches, 3u);
  ASSERT_EQ(r.layers.size(), 2u);
  EXPECT_EQ(r.policy.entries[0].layer_id, "fc0");
  EXPECT_EQ(r.policy.entries[0].granularity, GyGranularity::PerToken);

  QuantErrors mean;
  for (const Matrix& g : samples[1].gy) {
    const QuantErrors e = quantization_errors(g);
    mean.per_tensor += e.per_tensor / 3.0;
    mean.per_token += e.per_token / 3.0;
  }
  EXPECT_NEAR(r.layers[1].mean_errors.per_tensor, mean.per_tensor, 1e-12 * mean.per_tensor);
  EXPECT_NEAR(r.layers[1].mean_errors.per_token, mean.per_token, 1e-12 * mean.per_token);
  EXPECT_EQ(r.layers[1].choice, select_quantizer(mean, 0.5));
}

TEST(Lqs, CalibrationRejectsMissingData) {
  EXPECT_THROW(calibrate_from_gradients({}, 0.5, 1), std::invalid_argument);
  EXPECT_THROW(calibrate_from_gradients({LayerGradientSamples{"fc0", {}}}, 0.5, 1), std::invalid_argument);
}

QuantPolicy sample_policy() {
  QuantPolicy p;
  p.seed = 42;
  p.batches = 4;
  p.threshold = 0.35;
  p.entries = {{"fc0", GyGranularity::PerToken}, {"block0.qkv", GyGranularity::PerTensor}};
  return p;
}

TEST(Policy, TextRoundTrip) {
  const QuantPolicy p = sample_policy();
  const std::string text = format_policy(p);
  EXPECT_EQ(text, "# seed=42\n# threshold=0.35\n# batches=4\nfc0=per_token\nblock0.qkv=per_tensor\n");
  EXPECT_EQ(parse_policy(text), p);
  EXPECT_EQ(format_policy(parse_policy(text)), text);
}

TEST(Policy, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "hot_policy_test.txt";
  save_policy(sample_policy(), path);
  EXPECT_EQ(load_policy(path), sample_policy());
  std::filesystem::remove(path);
  EXPECT_THROW(load_policy(path), ConfigError);
}

TEST(Policy, ParseErrors) {
  EXPECT_THROW(parse_policy(""), ConfigError);
  EXPECT_THROW(parse_policy("# seed=1\n"), ConfigError);
  EXPECT_THROW(parse_policy("fc0 per_token\n"), ConfigError);
  EXPECT_THROW(parse_policy("fc0=per_channel\n"), ConfigError);
  EXPECT_THROW(parse_policy("=per_token\n"), ConfigError);
  EXPECT_THROW(parse_policy("fc0=per_token\nfc0=per_tensor\n"), ConfigError);
  EXPECT_THROW(parse_policy("# seed=abc\nfc0=per_token\n"), ConfigError);
  try {
    parse_policy("fc0=per_token\nfc1=bogus\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Policy, CoverageCheck) {
  const QuantPolicy p = sample_policy();
  EXPECT_NO_THROW(check_policy_covers(p, {"fc0", "block0.qkv"}));
  EXPECT_THROW(check_policy_covers(p, {"fc0"}), ConfigError);
  EXPECT_THROW(check_policy_covers(p, {"fc0", "block0.qkv", "head"}), ConfigError);
  EXPECT_EQ(p.find("fc0"), GyGranularity::PerToken);
  EXPECT_FALSE(p.find("nope").has_value());
}

}  // namespace
}  // namespace hot
