// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hot/matrix.hpp"

namespace hot {

struct Dataset {
  std::string name;
  Matrix inputs;  // N × D
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  /// Rows of `inputs` per sample: 1 for flat data, T for token sequences.
  std::size_t rows_per_sample = 1;

  std::size_t size() const noexcept { return labels.size(); }
  /// Throws DataError when labels and inputs disagree.
  void validate() const;
};

/// Two interleaved spirals, n/2 points each, radius 0.1 + 0.9·t over 1.5
/// turns; the second class is the first rotated by 180 degrees. Gaussian noise
/// of std `noise` is added, then coordinates are mapped into [0, 1].
Dataset make_spirals(std::size_t n, double noise, std::uint64_t seed);

/// Fixed random Fourier features [cos(2π·x·B), sin(2π·x·B)] with B ~ N(0, σ²),
/// so `out_dim` must be even. Deterministic per seed.
Matrix fourier_features(const Matrix& x, std::size_t out_dim, double sigma, std::uint64_t seed);

/// Sequences of `tokens` rows of width `dim`: each token is its class's mean
/// vector plus unit Gaussian noise. Labels alternate between `classes` classes.
Dataset make_token_task(std::size_t n, std::size_t tokens, std::size_t dim, std::size_t classes, std::uint64_t seed);

/// Rows of `m` at `indices`, in order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

/// Inputs and labels of the samples at `indices` (sequence rows kept together).
Dataset subset(const Dataset& d, std::span<const std::size_t> indices);

// IDX files (big-endian): images carry magic 0x00000803 and dims N, rows,
// cols of unsigned bytes; labels carry 0x00000801 and N bytes.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_idx_images(const std::filesystem::path& path, std::size_t n, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

}  // namespace hot
