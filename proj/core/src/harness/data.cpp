// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "hot/errors.hpp"
#include "hot/rng.hpp"

namespace hot {
namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

std::uint32_t read_be32(std::istream& is, const std::string& file) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw DataError(file + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  os.write(b.data(), 4);
}

std::vector<std::uint8_t> read_bytes(std::istream& is, std::size_t n, const std::string& file) {
  std::vector<std::uint8_t> out(n);
  if (n > 0 && !is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n))) {
    throw DataError(file + ": truncated payload");
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DataError("cannot open " + p.string());
  return is;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot open " + p.string() + " for writing");
  return os;
}

}  // namespace

void Dataset::validate() const {
  if (rows_per_sample == 0 || inputs.rows() != labels.size() * rows_per_sample) {
    throw DataError("dataset '" + name + "': " + std::to_string(inputs.rows()) + " input rows for " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t y : labels)
    if (y >= num_classes) throw DataError("dataset '" + name + "': label " + std::to_string(y) + " out of range");
}

Dataset make_spirals(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_spirals: need at least 2 points");
  if (!(noise >= 0.0)) throw std::invalid_argument("make_spirals: noise must be non-negative");
  Rng rng(seed);
  Dataset d{"spirals", Matrix(n, 2), std::vector<std::size_t>(n), 2, 1};
  const std::size_t per_class = (n + 1) / 2;
  const double turns = 1.5;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % 2;
    const std::size_t k = i / 2;
    const double t = per_class > 1 ? static_cast<double>(k) / static_cast<double>(per_class - 1) : 0.0;
    const double r = 0.1 + 0.9 * t;
    const double theta = 2.0 * std::numbers::pi * turns * t;
    const double sign = cls == 0 ? 1.0 : -1.0;
    double px = sign * r * std::cos(theta) + noise * rng.normal();
    double py = sign * r * std::sin(theta) + noise * rng.normal();
    d.inputs(i, 0) = static_cast<float>(std::clamp((px / 1.25 + 1.0) / 2.0, 0.0, 1.0));
    d.inputs(i, 1) = static_cast<float>(std::clamp((py / 1.25 + 1.0) / 2.0, 0.0, 1.0));
    d.labels[i] = cls;
  }
  return d;
}

Matrix fourier_features(const Matrix& x, std::size_t out_dim, double sigma, std::uint64_t seed) {
  if (out_dim == 0 || out_dim % 2 != 0) throw std::invalid_argument("fourier_features: out_dim must be even");
  Rng rng(seed);
  const Matrix b = random_matrix(rng, x.cols(), out_dim / 2, Normal{0.0, sigma});
  const Matrix proj = matmul(x, b);
  Matrix out(x.rows(), out_dim);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < out_dim / 2; ++j) {
      const double a = two_pi * proj(r, j);
      out(r, j) = static_cast<float>(std::cos(a));
      out(r, out_dim / 2 + j) = static_cast<float>(std::sin(a));
    }
  }
  return out;
}

Dataset make_token_task(std::size_t n, std::size_t tokens, std::size_t dim, std::size_t classes,
                        std::uint64_t seed) {
  if (n == 0 || tokens == 0 || dim == 0 || classes < 2) throw std::invalid_argument("make_token_task: bad shape");
  Rng rng(seed);
  const Matrix means = random_matrix(rng, classes, dim, Normal{0.0, 0.5});
  Dataset d{"tokens", Matrix(n * tokens, dim), std::vector<std::size_t>(n), classes, tokens};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % classes;
    d.labels[i] = cls;
    for (std::size_t t = 0; t < tokens; ++t) {
      auto row = d.inputs.row(i * tokens + t);
      for (std::size_t c = 0; c < dim; ++c) row[c] = static_cast<float>(means(cls, c) + rng.normal());
    }
  }
  return d;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) throw DimensionError("gather_rows: index out of range");
    const auto src = m.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
  std::vector<std::size_t> rows;
  rows.reserve(indices.size() * d.rows_per_sample);
  Dataset out{d.name, Matrix(), {}, d.num_classes, d.rows_per_sample};
  for (std::size_t s : indices) {
    if (s >= d.size()) throw DimensionError("subset: sample index out of range");
    out.labels.push_back(d.labels[s]);
    for (std::size_t t = 0; t < d.rows_per_sample; ++t) rows.push_back(s * d.rows_per_sample + t);
  }
  out.inputs = gather_rows(d.inputs, rows);
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const std::string iname = images.string();
  const std::string lname = labels.string();
  auto is = open_in(images);
  if (read_be32(is, iname) != kIdxImages) throw DataError(iname + ": bad IDX image magic");
  const std::size_t n = read_be32(is, iname);
  const std::size_t rows = read_be32(is, iname);
  const std::size_t cols = read_be32(is, iname);
  const auto pixels = read_bytes(is, n * rows * cols, iname);

  auto ls = open_in(labels);
  if (read_be32(ls, lname) != kIdxLabels) throw DataError(lname + ": bad IDX label magic");
  const std::size_t nl = read_be32(ls, lname);
  if (nl != n) throw DataError(lname + ": label count " + std::to_string(nl) + " != image count " + std::to_string(n));
  const auto raw = read_bytes(ls, n, lname);

  Dataset d{images.stem().string(), Matrix(n, rows * cols), std::vector<std::size_t>(n), 0, 1};
  auto dst = d.inputs.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) dst[i] = static_cast<float>(pixels[i]) / 255.0f;
  for (std::size_t i = 0; i < n; ++i) {
    d.labels[i] = raw[i];
    d.num_classes = std::max(d.num_classes, d.labels[i] + 1);
  }
  return d;
}

void write_idx_images(const std::filesystem::path& path, std::size_t n, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels) {
  if (pixels.size() != n * rows * cols) throw DimensionError("write_idx_images: pixel count mismatch");
  auto os = open_out(path);
  write_be32(os, kIdxImages);
  write_be32(os, static_cast<std::uint32_t>(n));
  write_be32(os, static_cast<std::uint32_t>(rows));
  write_be32(os, static_cast<std::uint32_t>(cols));
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  auto os = open_out(path);
  write_be32(os, kIdxLabels);
  write_be32(os, static_cast<std::uint32_t>(labels.size()));
  os.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace hot
