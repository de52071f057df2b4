// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hot/abc.hpp"
#include "hot/errors.hpp"
#include "hot/rng.hpp"

namespace hot {
namespace {

BackwardConfig gw_config(GwMode m, std::size_t rank = 8) {
  BackwardConfig c = BackwardConfig::hot();
  c.gw_mode = m;
  c.hadamard.rank = rank;
  return c;
}

void expect_same(const CompressedActivation& a, const CompressedActivation& b) {
  EXPECT_EQ(a.layer_id, b.layer_id);
  EXPECT_EQ(a.original_L, b.original_L);
  EXPECT_EQ(a.cols, b.cols);
  EXPECT_EQ(a.hadamard, b.hadamard);
  EXPECT_EQ(a.payload, b.payload);
}

TEST(Abc, GradientFromBufferIsBitIdentical) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t L = 1 + rng.below(70);
    const Matrix x = random_matrix(rng, L, 1 + rng.below(30), Normal{});
    const Matrix gy = random_matrix(rng, L, 1 + rng.below(30), Normal{});
    for (GwMode m : {GwMode::HlaInt8, GwMode::HlaFp}) {
      BackwardConfig cfg = gw_config(m, 1 + rng.below(16));
      if (t % 2 == 1) cfg.gy_granularity = GyGranularity::PerToken;
      const CompressedActivation c = compress_activation(x, "fc", cfg);
      EXPECT_EQ(gw_from_compressed(gy, c, cfg), hot_gw(gy, x, cfg));
    }
  }
}

TEST(Abc, SizesOfSmallAndLargeLayers) {
  Rng rng(2);
  const BackwardConfig cfg = gw_config(GwMode::HlaInt8);
  const CompressedActivation small = compress_activation(random_matrix(rng, 16, 16, Normal{}), "a", cfg);
  EXPECT_EQ(buffer_bytes(small), 132u);
  EXPECT_NEAR(compression_ratio(small), 132.0 / 1024.0, 1e-12);
  EXPECT_EQ(abc_bytes(16, 16, cfg.hadamard), 132u);

  const CompressedActivation big = compress_activation(random_matrix(rng, 256, 256, Normal{}), "b", cfg);
  EXPECT_GT(compression_ratio(big), 0.125);
  EXPECT_LE(compression_ratio(big), 0.127);
  EXPECT_EQ(abc_bytes(256, 256, cfg.hadamard), buffer_bytes(big));
}

TEST(Abc, PaddedLengthCountsWholeTiles) {
  const HadamardConfig hc;
  EXPECT_EQ(abc_bytes(17, 10, hc), 2u * 8u * 10u + 4u);
  Rng rng(3);
  const auto c = compress_activation(random_matrix(rng, 17, 10, Normal{}), "p", gw_config(GwMode::HlaInt8));
  EXPECT_EQ(c.payload_rows(), 16u);
  EXPECT_EQ(buffer_bytes(c), abc_bytes(17, 10, hc));
}

TEST(Abc, RejectsNonLowRankMode) {
  Rng rng(4);
  EXPECT_THROW(compress_activation(random_matrix(rng, 16, 4, Normal{}), "x", gw_config(GwMode::HqInt4)),
               std::invalid_argument);
}

TEST(Abc, ConfigMismatchThrows) {
  Rng rng(5);
  const Matrix x = random_matrix(rng, 32, 8, Normal{});
  const CompressedActivation c = compress_activation(x, "fc", gw_config(GwMode::HlaInt8, 8));
  EXPECT_THROW(gw_from_compressed(random_matrix(rng, 32, 4, Normal{}), c, gw_config(GwMode::HlaInt8, 4)),
               std::invalid_argument);
}

TEST(Abc, StreamRoundTrip) {
  Rng rng(6);
  for (GwMode m : {GwMode::HlaInt8, GwMode::HlaFp}) {
    const CompressedActivation c = compress_activation(random_matrix(rng, 40, 12, Normal{}), "block0.fc1", gw_config(m));
    std::stringstream ss;
    write_compressed(ss, c);
    EXPECT_EQ(ss.str().size(), spill_record_bytes(c));
    expect_same(read_compressed(ss), c);
  }
}

TEST(Abc, SpillAndLoad) {
  Rng rng(7);
  const auto dir = std::filesystem::temp_directory_path() / "hot_abc_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "fc0.hota";
  const BackwardConfig cfg = gw_config(GwMode::HlaInt8);
  const Matrix x = random_matrix(rng, 48, 20, Normal{});
  const Matrix gy = random_matrix(rng, 48, 6, Normal{});
  const CompressedActivation c = compress_activation(x, "fc0", cfg);
  spill_compressed(path, c);
  EXPECT_EQ(std::filesystem::file_size(path), spill_record_bytes(c));
  const CompressedActivation back = load_compressed(path);
  expect_same(back, c);
  EXPECT_EQ(gw_from_compressed(gy, back, cfg), hot_gw(gy, x, cfg));
  std::filesystem::remove_all(dir);
}

TEST(Abc, CorruptRecordsAreDataErrors) {
  Rng rng(8);
  const CompressedActivation c = compress_activation(random_matrix(rng, 16, 4, Normal{}), "fc", gw_config(GwMode::HlaInt8));
  std::stringstream ss;
  write_compressed(ss, c);
  const std::string good = ss.str();

  std::string bad_magic = good;
  bad_magic[1] = 'X';
  std::stringstream s1(bad_magic);
  EXPECT_THROW(read_compressed(s1), DataError);

  std::stringstream s2(good.substr(0, good.size() / 2));
  EXPECT_THROW(read_compressed(s2), DataError);

  std::stringstream s3(good.substr(0, 6));
  EXPECT_THROW(read_compressed(s3), DataError);

  EXPECT_THROW(load_compressed("/nonexistent/dir/x.hota"), DataError);
}

}  // namespace
}  // namespace hot
