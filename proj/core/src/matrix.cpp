// SPDX-License-Identifier: Apache-2.0
#include "hot/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "hot/binary_io.hpp"
#include "hot/errors.hpp"
#include "hot/parallel.hpp"
#include "hot/rng.hpp"

namespace hot {
namespace {

std::string shape_of(const Matrix& m) { return m.shape_string(); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<float> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_of(a) + " · " + shape_of(b));
  }
  const std::size_t n = a.cols();
  const std::size_t k = b.cols();
  Matrix out(a.rows(), k);
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(k);
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const auto arow = a.row(i);
      for (std::size_t p = 0; p < n; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const auto brow = b.row(p);
        for (std::size_t j = 0; j < k; ++j) acc[j] += av * static_cast<double>(brow[j]);
      }
      auto orow = out.row(i);
      for (std::size_t j = 0; j < k; ++j) orow[j] = static_cast<float>(acc[j]);
    }
  });
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_of(a) + " · (" + shape_of(b) + ")^T");
  }
  const std::size_t n = a.cols();
  Matrix out(a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto arow = a.row(i);
      for (std::size_t j = 0; j < b.rows(); ++j) {
        const auto brow = b.row(j);
        double acc = 0.0;
        for (std::size_t p = 0; p < n; ++p) acc += static_cast<double>(arow[p]) * brow[p];
        out(i, j) = static_cast<float>(acc);
      }
    }
  });
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: inner dimensions differ, (" + shape_of(a) + ")^T · " + shape_of(b));
  }
  const std::size_t n = a.rows();
  const std::size_t k = b.cols();
  Matrix out(a.cols(), k);
  parallel_for(a.cols(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(k);
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t p = 0; p < n; ++p) {
        const double av = a(p, i);
        if (av == 0.0) continue;
        const auto brow = b.row(p);
        for (std::size_t j = 0; j < k; ++j) acc[j] += av * static_cast<double>(brow[j]);
      }
      auto orow = out.row(i);
      for (std::size_t j = 0; j < k; ++j) orow[j] = static_cast<float>(acc[j]);
    }
  });
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  add_inplace(out, b);
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

Matrix scaled(const Matrix& a, float s) {
  Matrix out = a;
  for (float& v : out.data()) v *= s;
  return out;
}

void add_inplace(Matrix& acc, const Matrix& b) {
  require_same_shape(acc, b, "add");
  auto o = acc.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (float v : a.data()) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (float v : a.data()) m = std::max(m, static_cast<double>(std::fabs(v)));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i)
    m = std::max(m, std::fabs(static_cast<double>(ad[i]) - bd[i]));
  return m;
}

double relative_error(const Matrix& approx, const Matrix& ref) {
  require_same_shape(approx, ref, "relative_error");
  double num = 0.0;
  double den = 0.0;
  auto ad = approx.data();
  auto rd = ref.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double d = static_cast<double>(ad[i]) - rd[i];
    num += d * d;
    den += static_cast<double>(rd[i]) * rd[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](float v) { return std::isfinite(v); });
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, const Distribution& dist) {
  Matrix m(rows, cols);
  if (const auto* u = std::get_if<Uniform>(&dist)) {
    if (!(std::isfinite(u->lo) && std::isfinite(u->hi)) || u->lo > u->hi) {
      throw std::invalid_argument("random_matrix: uniform bounds must be finite with lo <= hi");
    }
    for (float& v : m.data()) v = static_cast<float>(rng.uniform(u->lo, u->hi));
  } else {
    const auto& n = std::get<Normal>(dist);
    if (!(std::isfinite(n.mean) && std::isfinite(n.stddev)) || n.stddev < 0.0) {
      throw std::invalid_argument("random_matrix: normal needs finite mean and stddev >= 0");
    }
    for (float& v : m.data()) v = static_cast<float>(n.mean + n.stddev * rng.normal());
  }
  return m;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  io::write_magic(os, "HOTM");
  io::write_u32(os, static_cast<std::uint32_t>(m.rows()));
  io::write_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (float v : m.data()) io::write_f32(os, v);
}

Matrix read_matrix(std::istream& is) {
  io::expect_magic(is, "HOTM");
  const std::size_t rows = io::read_u32(is);
  const std::size_t cols = io::read_u32(is);
  std::vector<float> data(rows * cols);
  for (float& v : data) v = io::read_f32(is);
  return Matrix(rows, cols, std::move(data));
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  write_matrix(os, m);
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return read_matrix(is);
}

}  // namespace hot
