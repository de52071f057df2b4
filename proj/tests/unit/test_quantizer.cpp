// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "hot/errors.hpp"
#include "hot/op_counter.hpp"
#include "hot/quantizer.hpp"
#include "hot/rng.hpp"

namespace hot {
namespace {

// Rounding rule written out independently: the low 11 mantissa bits of the
// input, read as a fraction of 2048, are the threshold for rounding up.
int reference_pseudo_stochastic(float v, float scale, int qmax) {
  const float t = v / scale;
  const float fl = std::floor(t);
  const double u = static_cast<double>(std::bit_cast<std::uint32_t>(v) & 0x7FFu) / 2048.0;
  long long code = static_cast<long long>(fl) + ((t - fl) > u ? 1 : 0);
  if (code > qmax) code = qmax;
  if (code < -qmax) code = -qmax;
  return static_cast<int>(code);
}

TEST(Quantizer, QmaxPerWidth) {
  EXPECT_EQ(qmax_for_bits(4), 7);
  EXPECT_EQ(qmax_for_bits(8), 127);
  EXPECT_THROW(qmax_for_bits(5), std::invalid_argument);
  EXPECT_THROW(qmax_for_bits(16), std::invalid_argument);
}

TEST(Quantizer, ScalesBoundTheRange) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Matrix m = random_matrix(rng, 1 + rng.below(10), 1 + rng.below(30), Normal{0.0, std::exp(rng.normal() * 3)});
    for (int bits : {4, 8}) {
      for (auto g : {Granularity::PerTensor, Granularity::PerRow}) {
        const QParams p = compute_qparams(m, bits, g);
        ASSERT_EQ(p.scales.size(), g == Granularity::PerTensor ? 1u : m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) {
          for (float v : m.row(r)) ASSERT_LE(std::fabs(v) / p.scale_for_row(r), static_cast<float>(p.qmax()));
        }
      }
    }
  }
}

TEST(Quantizer, ZeroRangeUsesSmallestNormal) {
  const QParams p = compute_qparams(Matrix(3, 4), 8, Granularity::PerRow);
  for (float s : p.scales) EXPECT_EQ(s, FLT_MIN);
  const Matrix back = dequantize(quantize(Matrix(3, 4), 4, Granularity::PerTensor, Rounding::PseudoStochastic));
  EXPECT_EQ(back, Matrix(3, 4));
}

TEST(Quantizer, EmptyMatrixThrows) { EXPECT_THROW(compute_qparams(Matrix(0, 3), 8, Granularity::PerTensor), DimensionError); }

TEST(Quantizer, PseudoStochasticMatchesRule) {
  Rng rng(2);
  for (int i = 0; i < 100000; ++i) {
    const float v = static_cast<float>(rng.uniform(-3.0, 3.0));
    ASSERT_EQ(pseudo_stochastic_round(v, 0.37f, 7), reference_pseudo_stochastic(v, 0.37f, 7)) << v;
  }
}

TEST(Quantizer, PseudoStochasticPicksNeighbour) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const float v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const float scale = 1.0f / 7.0f;
    const int c = pseudo_stochastic_round(v, scale, 7);
    const double t = static_cast<double>(v) / scale;
    ASSERT_TRUE(c == static_cast<int>(std::floor(t)) || c == static_cast<int>(std::floor(t)) + 1 ||
                std::abs(c) == 7);
    ASSERT_LE(std::abs(c * scale - v), scale * (1 + 1e-6));
  }
}

TEST(Quantizer, PseudoStochasticIsUnbiased) {
  Rng rng(4);
  const Matrix m = random_matrix(rng, 100, 1000, Uniform{-1.0, 1.0});
  const QuantTensor q = quantize(m, 4, Granularity::PerTensor, Rounding::PseudoStochastic);
  const Matrix back = dequantize(q);
  const double scale = q.params().scales.front();
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) sum += static_cast<double>(back.data()[i]) - m.data()[i];
  EXPECT_LT(std::abs(sum / static_cast<double>(m.size())), 0.005 * scale);
}

TEST(Quantizer, NearestMatchesStdRound) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const float v = static_cast<float>(rng.uniform(-2.0, 2.0));
    const int expected = std::clamp(static_cast<int>(std::round(v / 0.02f)), -127, 127);
    ASSERT_EQ(round_nearest(v, 0.02f, 127), expected);
  }
  EXPECT_EQ(round_nearest(0.5f, 1.0f, 7), 1);
  EXPECT_EQ(round_nearest(-0.5f, 1.0f, 7), -1);
  EXPECT_EQ(round_nearest(100.0f, 1.0f, 7), 7);
}

TEST(Quantizer, NearestErrorAtMostHalfStep) {
  Rng rng(6);
  const Matrix m = random_matrix(rng, 20, 30, Normal{});
  for (int bits : {4, 8}) {
    const QuantTensor q = quantize(m, bits, Granularity::PerRow, Rounding::Nearest);
    const Matrix back = dequantize(q);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c)
        ASSERT_LE(std::abs(back(r, c) - m(r, c)), 0.5f * q.params().scale_for_row(r) * (1 + 1e-5f));
  }
}

TEST(Quantizer, DeterministicForSameInput) {
  Rng rng(7);
  const Matrix m = random_matrix(rng, 8, 8, Normal{});
  EXPECT_EQ(quantize(m, 4, Granularity::PerTensor, Rounding::PseudoStochastic),
            quantize(m, 4, Granularity::PerTensor, Rounding::PseudoStochastic));
}

TEST(Quantizer, SaturationIsCounted) {
  const Matrix m = Matrix::from_rows({{10.0f, -10.0f, 0.5f}});
  const QParams p{8, Granularity::PerTensor, {0.01f}};
  ScopedOpCount count;
  const QuantTensor q = quantize_with(m, p, Rounding::Nearest);
  EXPECT_EQ(q.saturated(), 2u);
  EXPECT_EQ(q.code(0, 0), 127);
  EXPECT_EQ(q.code(0, 1), -127);
  EXPECT_EQ(count.counts().saturated_elements, 2u);
  EXPECT_EQ(count.counts().quantized_elements, 3u);
}

TEST(Nibbles, PackLayout) {
  const std::vector<std::int8_t> codes{1, -2, 7};
  const auto bytes = pack_nibbles(codes);
  ASSERT_EQ(bytes.size(), 2u);
  EXPECT_EQ(bytes[0], 0xE1);
  EXPECT_EQ(bytes[1], 0x07);
  EXPECT_EQ(unpack_nibbles(bytes, 3), codes);
}

TEST(Nibbles, RoundTripAllCodes) {
  std::vector<std::int8_t> codes;
  for (int a = -7; a <= 7; ++a)
    for (int b = -7; b <= 7; ++b) {
      codes.push_back(static_cast<std::int8_t>(a));
      codes.push_back(static_cast<std::int8_t>(b));
    }
  EXPECT_EQ(unpack_nibbles(pack_nibbles(codes), codes.size()), codes);
}

TEST(Nibbles, RejectsOutOfRange) {
  const std::vector<std::int8_t> codes{9};
  EXPECT_THROW(pack_nibbles(codes), std::out_of_range);
  const std::vector<std::uint8_t> bytes{0x11};
  EXPECT_THROW(unpack_nibbles(bytes, 3), std::out_of_range);
}

TEST(QuantTensor, Int4PackedPerRow) {
  Rng rng(8);
  const Matrix m = random_matrix(rng, 5, 7, Normal{});
  const QuantTensor q = quantize(m, 4, Granularity::PerRow, Rounding::Nearest);
  EXPECT_EQ(q.row_stride_bytes(), 4u);
  EXPECT_EQ(q.payload().size(), 20u);
  const auto codes = q.codes();
  EXPECT_EQ(QuantTensor::from_codes(5, 7, codes, q.params()), q);
}

TEST(QuantTensor, FromCodesValidates) {
  const std::vector<std::int8_t> codes{8};
  EXPECT_THROW(QuantTensor::from_codes(1, 1, codes, QParams{4, Granularity::PerTensor, {1.0f}}), std::out_of_range);
  const std::vector<std::int8_t> ok{1, 2};
  EXPECT_THROW(QuantTensor::from_codes(1, 1, ok, QParams{8, Granularity::PerTensor, {1.0f}}), DimensionError);
  EXPECT_THROW(QuantTensor::from_codes(2, 1, ok, QParams{8, Granularity::PerRow, {1.0f}}), DimensionError);
}

TEST(QuantTensor, RecordRoundTrip) {
  Rng rng(9);
  for (int bits : {4, 8}) {
    for (auto g : {Granularity::PerTensor, Granularity::PerRow}) {
      const QuantTensor q = quantize(random_matrix(rng, 6, 9, Normal{}), bits, g, Rounding::PseudoStochastic);
      std::stringstream ss;
      write_quant_tensor(ss, q);
      EXPECT_EQ(ss.str().size(), quant_tensor_record_bytes(q));
      EXPECT_EQ(read_quant_tensor(ss), q);
    }
  }
}

TEST(QuantTensor, CorruptRecordIsDataError) {
  Rng rng(10);
  const QuantTensor q = quantize(random_matrix(rng, 4, 4, Normal{}), 8, Granularity::PerTensor, Rounding::Nearest);
  std::stringstream ss;
  write_quant_tensor(ss, q);
  std::string s = ss.str();
  std::stringstream truncated(s.substr(0, s.size() - 3));
  EXPECT_THROW(read_quant_tensor(truncated), DataError);
  s[0] = 'X';
  std::stringstream bad(s);
  EXPECT_THROW(read_quant_tensor(bad), DataError);
}

}  // namespace
}  // namespace hot
