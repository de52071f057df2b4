// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hot/errors.hpp"
#include "hot/matrix.hpp"
#include "hot/rng.hpp"
#include "oracles.hpp"

namespace hot {
namespace {

std::uint64_t reference_state(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z == 0 ? 1 : z;
}

std::uint64_t reference_next(std::uint64_t& s) {
  s ^= s >> 12;
  s ^= s << 25;
  s ^= s >> 27;
  return s * 0x2545F4914F6CDD1Dull;
}

TEST(Rng, MatchesDocumentedRecurrence) {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 0xFFFFFFFFFFFFFFFFull}) {
    Rng rng(seed);
    std::uint64_t s = reference_state(seed);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(rng.next_u64(), reference_next(s));
  }
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(4);
  double s1 = 0.0;
  double s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s1 += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, SplitStreamsDifferAndAreStable) {
  const Rng root(9);
  Rng a1 = root.split(1);
  Rng a2 = root.split(1);
  Rng b = root.split(2);
  const auto x = a1.next_u64();
  EXPECT_EQ(x, a2.next_u64());
  EXPECT_NE(x, b.next_u64());
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) ASSERT_LT(rng.below(7), 7u);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(6);
  std::vector<std::size_t> v(100);
  std::iota(v.begin(), v.end(), 0);
  shuffle(v, rng);
  std::vector<std::size_t> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) ASSERT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Matrix, ProductsMatchFp64Oracle) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 1 + rng.below(17);
    const std::size_t k = 1 + rng.below(33);
    const std::size_t n = 1 + rng.below(9);
    const Matrix a = random_matrix(rng, m, k, Normal{});
    const Matrix b = random_matrix(rng, k, n, Normal{});
    const oracle::Dense ref = oracle::mul(oracle::to_dense(a), oracle::to_dense(b));
    EXPECT_LT(oracle::max_abs_diff(ref, matmul(a, b)), 1e-5);
    EXPECT_LT(oracle::max_abs_diff(ref, matmul_nt(a, transpose(b))), 1e-5);
    EXPECT_LT(oracle::max_abs_diff(ref, matmul_tn(transpose(a), b)), 1e-5);
  }
}

TEST(Matrix, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
  EXPECT_THROW(add(Matrix(2, 3), Matrix(3, 2)), DimensionError);
}

TEST(Matrix, ElementwiseHelpers) {
  const Matrix a = Matrix::from_rows({{1, -2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{0.5, 0.5}, {-1, 2}});
  EXPECT_EQ(add(a, b), Matrix::from_rows({{1.5, -1.5}, {2, 6}}));
  EXPECT_EQ(subtract(a, b), Matrix::from_rows({{0.5, -2.5}, {4, 2}}));
  EXPECT_EQ(scaled(a, 2.0f), Matrix::from_rows({{2, -4}, {6, 8}}));
  EXPECT_DOUBLE_EQ(max_abs(a), 4.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(a), std::sqrt(30.0));
  EXPECT_DOUBLE_EQ(relative_error(a, a), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(Matrix(2, 2), Matrix(2, 2)), 0.0);
  Matrix c = a;
  c(0, 0) = std::nanf("");
  EXPECT_FALSE(all_finite(c));
  EXPECT_TRUE(all_finite(a));
}

TEST(Matrix, RandomMatrixIsDeterministic) {
  Rng r1(8);
  Rng r2(8);
  EXPECT_EQ(random_matrix(r1, 5, 7, Uniform{-1, 1}), random_matrix(r2, 5, 7, Uniform{-1, 1}));
}

TEST(Matrix, RecordRoundTrip) {
  Rng rng(10);
  const Matrix m = random_matrix(rng, 6, 5, Normal{});
  std::stringstream ss;
  write_matrix(ss, m);
  EXPECT_EQ(read_matrix(ss), m);
}

TEST(Matrix, CorruptRecordIsDataError) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_matrix(bad), DataError);
  Rng rng(11);
  std::stringstream ss;
  write_matrix(ss, random_matrix(rng, 3, 3, Normal{}));
  std::string s = ss.str();
  s.resize(s.size() - 2);
  std::stringstream truncated(s);
  EXPECT_THROW(read_matrix(truncated), DataError);
}

}  // namespace
}  // namespace hot
