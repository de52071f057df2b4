// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hot {

class Rng;

/// Dense row-major FP32 matrix. Every gradient, weight and activation in the
/// library is one of these; batch dimensions are stacked into rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  std::string shape_string() const;

  // Exact (bitwise-value) comparison.
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// a·b with FP64 accumulation, rounded once to FP32.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a·bᵀ without materialising the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// aᵀ·b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, float s);
void add_inplace(Matrix& acc, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
/// ‖approx − ref‖_F / ‖ref‖_F; 0 when both are zero.
double relative_error(const Matrix& approx, const Matrix& ref);
bool all_finite(const Matrix& a);

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct Normal {
  double mean = 0.0;
  double stddev = 1.0;
};
using Distribution = std::variant<Uniform, Normal>;

/// Fills a rows×cols matrix from `dist`, consuming values from `rng` in row-major order.
Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, const Distribution& dist);

// HOTM fixture format: "HOTM", u32 rows, u32 cols, rows·cols f32, all little-endian.
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace hot
