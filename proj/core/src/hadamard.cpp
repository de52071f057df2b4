// SPDX-License-Identifier: Apache-2.0
#include "hot/hadamard.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "hot/errors.hpp"
#include "hot/op_counter.hpp"

namespace hot {
namespace {

float inv_sqrt(std::size_t n) { return static_cast<float>(1.0 / std::sqrt(static_cast<double>(n))); }

void count_fwht(std::size_t n, std::size_t vectors) {
  if (auto* c = detail::active_op_counts()) {
    c->butterfly_addsub += static_cast<std::uint64_t>(vectors) * n * log2_exact(n);
    c->normalize_muls += static_cast<std::uint64_t>(vectors) * n;
  }
}

// Butterflies across whole rows: rows [first, first + tile) of `m` form one
// tile along the row axis, and each column is transformed independently.
void fwht_row_tile(Matrix& m, std::size_t first, std::size_t tile) {
  const std::size_t cols = m.cols();
  for (std::size_t h = 1; h < tile; h <<= 1) {
    for (std::size_t i = 0; i < tile; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        auto top = m.row(first + j);
        auto bot = m.row(first + j + h);
        for (std::size_t c = 0; c < cols; ++c) {
          const float x = top[c];
          const float y = bot[c];
          top[c] = x + y;
          bot[c] = x - y;
        }
      }
    }
  }
  const float s = inv_sqrt(tile);
  for (std::size_t j = 0; j < tile; ++j)
    for (float& v : m.row(first + j)) v *= s;
  count_fwht(tile, cols);
}

void validate_axis_length(std::size_t len, const HadamardConfig& cfg) {
  cfg.validate();
  if (len == 0) throw DimensionError("Hadamard transform along an empty axis");
}

// Copies `m` with the row axis zero-padded to `rows`.
Matrix pad_rows(const Matrix& m, std::size_t rows) {
  Matrix out(rows, m.cols());
  std::copy(m.data().begin(), m.data().end(), out.data().begin());
  return out;
}

}  // namespace

void HadamardConfig::validate() const {
  if (!is_power_of_two(tile) || tile > (std::size_t{1} << kMaxHadamardOrder)) {
    throw std::invalid_argument("HadamardConfig: tile must be a power of two <= 4096, got " +
                                std::to_string(tile));
  }
  if (rank < 1 || rank > tile) {
    throw std::invalid_argument("HadamardConfig: rank must be in [1, tile], got " + std::to_string(rank));
  }
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && std::has_single_bit(n); }

std::size_t log2_exact(std::size_t n) {
  if (!is_power_of_two(n)) throw std::invalid_argument("length " + std::to_string(n) + " is not a power of two");
  return static_cast<std::size_t>(std::countr_zero(n));
}

std::size_t padded_length(std::size_t len, std::size_t tile) noexcept {
  return (len + tile - 1) / tile * tile;
}

Matrix build_hadamard(unsigned d) {
  if (d > kMaxHadamardOrder) {
    throw std::invalid_argument("build_hadamard: order " + std::to_string(d) + " exceeds 2^12 guard");
  }
  const std::size_t n = std::size_t{1} << d;
  const float mag = static_cast<float>(std::pow(std::sqrt(0.5), static_cast<double>(d)));
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = (std::popcount(i & j) % 2 == 0) ? mag : -mag;
  return h;
}

void fwht_inplace(std::span<float> v) {
  const std::size_t n = v.size();
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("fwht: length " + std::to_string(n) + " is not a power of two");
  }
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const float x = v[j];
        const float y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
  const float s = inv_sqrt(n);
  for (float& x : v) x *= s;
  count_fwht(n, 1);
}

std::vector<float> fwht(std::span<const float> v) {
  std::vector<float> out(v.begin(), v.end());
  fwht_inplace(out);
  return out;
}

std::size_t walsh_sequency(std::size_t index, std::size_t n) {
  if (!is_power_of_two(n) || index >= n) throw std::invalid_argument("walsh_sequency: bad index or size");
  std::size_t changes = 0;
  bool prev = false;  // sign of entry 0 is always +
  for (std::size_t j = 1; j < n; ++j) {
    const bool neg = std::popcount(index & j) % 2 == 1;
    if (neg != prev) ++changes;
    prev = neg;
  }
  return changes;
}

Matrix block_ht(const Matrix& m, Axis axis, const HadamardConfig& cfg) {
  const std::size_t tile = cfg.tile;
  if (axis == Axis::Cols) {
    validate_axis_length(m.cols(), cfg);
    const std::size_t padded = padded_length(m.cols(), tile);
    Matrix out(m.rows(), padded);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto src = m.row(r);
      auto dst = out.row(r);
      std::copy(src.begin(), src.end(), dst.begin());
      for (std::size_t t = 0; t < padded; t += tile) fwht_inplace(dst.subspan(t, tile));
    }
    return out;
  }
  validate_axis_length(m.rows(), cfg);
  Matrix out = pad_rows(m, padded_length(m.rows(), tile));
  for (std::size_t t = 0; t < out.rows(); t += tile) fwht_row_tile(out, t, tile);
  return out;
}

LowpassIndexSet lowpass_indices(const HadamardConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.tile;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  if (cfg.ordering == LowpassOrdering::Sequency) {
    std::stable_sort(order.begin(), order.end(), [n](std::size_t x, std::size_t y) {
      return walsh_sequency(x, n) < walsh_sequency(y, n);
    });
  } else {
    // The tile is read as a 2^da × 2^db patch: H_n = H_a ⊗ H_b, so index
    // i = (i >> db, i & (2^db - 1)) names one vertical and one horizontal Walsh row.
    const std::size_t d = log2_exact(n);
    const std::size_t db = d - d / 2;
    const std::size_t na = std::size_t{1} << (d / 2);
    const std::size_t nb = std::size_t{1} << db;
    auto key = [&](std::size_t i) {
      const std::size_t a = walsh_sequency(i >> db, na);
      const std::size_t b = walsh_sequency(i & (nb - 1), nb);
      return std::make_tuple(a + b, a, b);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return key(x) < key(y); });
  }
  order.resize(cfg.rank);
  return LowpassIndexSet{std::move(order)};
}

Matrix hla_reduce(const Matrix& m, Axis axis, const HadamardConfig& cfg) {
  const auto keep = lowpass_indices(cfg).indices;
  const std::size_t tile = cfg.tile;
  const std::size_t rank = cfg.rank;
  if (axis == Axis::Cols) {
    validate_axis_length(m.cols(), cfg);
    const std::size_t tiles = padded_length(m.cols(), tile) / tile;
    Matrix out(m.rows(), tiles * rank);
    std::vector<float> buf(tile);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto src = m.row(r);
      auto dst = out.row(r);
      for (std::size_t t = 0; t < tiles; ++t) {
        std::fill(buf.begin(), buf.end(), 0.0f);
        const std::size_t begin = t * tile;
        const std::size_t end = std::min(src.size(), begin + tile);
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin), src.begin() + static_cast<std::ptrdiff_t>(end),
                  buf.begin());
        fwht_inplace(buf);
        for (std::size_t k = 0; k < rank; ++k) dst[t * rank + k] = buf[keep[k]];
      }
    }
    return out;
  }
  const Matrix full = block_ht(m, Axis::Rows, cfg);
  const std::size_t tiles = full.rows() / tile;
  Matrix out(tiles * rank, m.cols());
  for (std::size_t t = 0; t < tiles; ++t) {
    for (std::size_t k = 0; k < rank; ++k) {
      auto src = full.row(t * tile + keep[k]);
      std::copy(src.begin(), src.end(), out.row(t * rank + k).begin());
    }
  }
  return out;
}

Matrix hla_lift(const Matrix& reduced, Axis axis, const HadamardConfig& cfg, std::size_t original_len) {
  cfg.validate();
  const auto keep = lowpass_indices(cfg).indices;
  const std::size_t tile = cfg.tile;
  const std::size_t rank = cfg.rank;
  const std::size_t tiles = padded_length(original_len, tile) / tile;
  const std::size_t reduced_len = axis == Axis::Cols ? reduced.cols() : reduced.rows();
  if (original_len == 0 || reduced_len != tiles * rank) {
    throw DimensionError("hla_lift: reduced length " + std::to_string(reduced_len) + " does not match " +
                         std::to_string(tiles) + " tiles x rank " + std::to_string(rank) +
                         " for original length " + std::to_string(original_len));
  }
  if (axis == Axis::Cols) {
    Matrix out(reduced.rows(), original_len);
    std::vector<float> buf(tile);
    for (std::size_t r = 0; r < reduced.rows(); ++r) {
      auto src = reduced.row(r);
      auto dst = out.row(r);
      for (std::size_t t = 0; t < tiles; ++t) {
        std::fill(buf.begin(), buf.end(), 0.0f);
        for (std::size_t k = 0; k < rank; ++k) buf[keep[k]] = src[t * rank + k];
        fwht_inplace(buf);
        const std::size_t begin = t * tile;
        const std::size_t end = std::min(original_len, begin + tile);
        std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(end - begin),
                  dst.begin() + static_cast<std::ptrdiff_t>(begin));
      }
    }
    return out;
  }
  Matrix full(tiles * tile, reduced.cols());
  for (std::size_t t = 0; t < tiles; ++t) {
    for (std::size_t k = 0; k < rank; ++k) {
      auto src = reduced.row(t * rank + k);
      std::copy(src.begin(), src.end(), full.row(t * tile + keep[k]).begin());
    }
  }
  for (std::size_t t = 0; t < full.rows(); t += tile) fwht_row_tile(full, t, tile);
  if (full.rows() == original_len) return full;
  Matrix out(original_len, full.cols());
  std::copy(full.data().begin(), full.data().begin() + static_cast<std::ptrdiff_t>(out.size()), out.data().begin());
  return out;
}

}  // namespace hot
