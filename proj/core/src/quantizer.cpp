// SPDX-License-Identifier: Apache-2.0
#include "hot/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hot/binary_io.hpp"
#include "hot/errors.hpp"
#include "hot/op_counter.hpp"

namespace hot {
namespace {

constexpr float kMinScale = std::numeric_limits<float>::min();

float scale_for_max(float max_abs, int qmax) {
  if (!(max_abs > 0.0f)) return kMinScale;
  const float q = static_cast<float>(qmax);
  float scale = max_abs / q;
  if (!(scale >= kMinScale)) scale = kMinScale;
  while (max_abs / scale > q) scale = std::nextafter(scale, std::numeric_limits<float>::infinity());
  return scale;
}

int clamp_code(long long code, int qmax, std::size_t& saturated) {
  if (code > qmax) {
    ++saturated;
    return qmax;
  }
  if (code < -qmax) {
    ++saturated;
    return -qmax;
  }
  return static_cast<int>(code);
}

long long pseudo_stochastic_unclamped(float v, float scale) {
  const float t = v / scale;
  const float floor_t = std::floor(t);
  const float frac = t - floor_t;
  const float u = static_cast<float>(std::bit_cast<std::uint32_t>(v) & 0x7FFu) * 0x1.0p-11f;
  return static_cast<long long>(floor_t) + (frac > u ? 1 : 0);
}

long long nearest_unclamped(float v, float scale) {
  return static_cast<long long>(std::round(v / scale));
}

std::size_t row_stride(std::size_t cols, int bits) { return bits == 4 ? (cols + 1) / 2 : cols; }

void require_bits(int bits) {
  if (bits != 4 && bits != 8) throw std::invalid_argument("quantizer: bits must be 4 or 8, got " + std::to_string(bits));
}

}  // namespace

int qmax_for_bits(int bits) {
  require_bits(bits);
  return bits == 4 ? 7 : 127;
}

QParams compute_qparams(const Matrix& m, int bits, Granularity granularity) {
  if (m.empty()) throw DimensionError("compute_qparams: empty matrix " + m.shape_string());
  const int qmax = qmax_for_bits(bits);
  QParams p{bits, granularity, {}};
  if (granularity == Granularity::PerTensor) {
    float mx = 0.0f;
    for (float v : m.data()) mx = std::max(mx, std::fabs(v));
    p.scales.push_back(scale_for_max(mx, qmax));
  } else {
    p.scales.reserve(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      float mx = 0.0f;
      for (float v : m.row(r)) mx = std::max(mx, std::fabs(v));
      p.scales.push_back(scale_for_max(mx, qmax));
    }
  }
  return p;
}

int pseudo_stochastic_round(float v, float scale, int qmax) {
  std::size_t ignored = 0;
  return clamp_code(pseudo_stochastic_unclamped(v, scale), qmax, ignored);
}

int round_nearest(float v, float scale, int qmax) {
  std::size_t ignored = 0;
  return clamp_code(nearest_unclamped(v, scale), qmax, ignored);
}

std::size_t QuantTensor::row_stride_bytes() const noexcept { return row_stride(cols_, params_.bits); }

QuantTensor QuantTensor::from_codes(std::size_t rows, std::size_t cols, std::span<const std::int8_t> codes,
                                    QParams params) {
  const int qmax = qmax_for_bits(params.bits);
  if (codes.size() != rows * cols) throw DimensionError("QuantTensor::from_codes: code count mismatch");
  const std::size_t want_scales = params.granularity == Granularity::PerTensor ? 1 : rows;
  if (params.scales.size() != want_scales) throw DimensionError("QuantTensor::from_codes: scale count mismatch");
  QuantTensor q;
  q.rows_ = rows;
  q.cols_ = cols;
  q.params_ = std::move(params);
  for (std::int8_t c : codes) {
    if (c > qmax || c < -qmax) throw std::out_of_range("QuantTensor::from_codes: code " + std::to_string(c) + " outside +-" + std::to_string(qmax));
  }
  if (q.params_.bits == 8) {
    q.payload_.resize(codes.size());
    std::transform(codes.begin(), codes.end(), q.payload_.begin(),
                   [](std::int8_t c) { return static_cast<std::uint8_t>(c); });
  } else {
    const std::size_t stride = row_stride(cols, 4);
    q.payload_.reserve(rows * stride);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto packed = pack_nibbles(codes.subspan(r * cols, cols));
      q.payload_.insert(q.payload_.end(), packed.begin(), packed.end());
    }
  }
  return q;
}

int QuantTensor::code(std::size_t r, std::size_t c) const {
  if (params_.bits == 8) return static_cast<std::int8_t>(payload_[r * cols_ + c]);
  const std::uint8_t byte = payload_[r * row_stride_bytes() + c / 2];
  const std::uint8_t nib = (c % 2 == 0) ? (byte & 0x0Fu) : (byte >> 4);
  return (nib & 0x8u) ? static_cast<int>(nib) - 16 : static_cast<int>(nib);
}

std::vector<std::int8_t> QuantTensor::codes() const {
  std::vector<std::int8_t> out(rows_ * cols_);
  if (params_.bits == 8) {
    std::transform(payload_.begin(), payload_.end(), out.begin(),
                   [](std::uint8_t b) { return static_cast<std::int8_t>(b); });
    return out;
  }
  const std::size_t stride = row_stride_bytes();
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto row = unpack_nibbles(std::span(payload_).subspan(r * stride, stride), cols_);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(r * cols_));
  }
  return out;
}

QuantTensor quantize_with(const Matrix& m, const QParams& params, Rounding rounding) {
  const int qmax = qmax_for_bits(params.bits);
  const std::size_t want_scales = params.granularity == Granularity::PerTensor ? 1 : m.rows();
  if (params.scales.size() != want_scales) throw DimensionError("quantize: scale count does not match " + m.shape_string());
  std::vector<std::int8_t> codes(m.size());
  std::size_t saturated = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const float scale = params.scale_for_row(r);
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const long long raw = rounding == Rounding::PseudoStochastic ? pseudo_stochastic_unclamped(row[c], scale)
                                                                   : nearest_unclamped(row[c], scale);
      codes[r * m.cols() + c] = static_cast<std::int8_t>(clamp_code(raw, qmax, saturated));
    }
  }
  if (auto* c = detail::active_op_counts()) {
    c->quantized_elements += m.size();
    c->saturated_elements += saturated;
  }
  QuantTensor q = QuantTensor::from_codes(m.rows(), m.cols(), codes, params);
  q.saturated_ = saturated;
  return q;
}

QuantTensor quantize(const Matrix& m, int bits, Granularity granularity, Rounding rounding) {
  return quantize_with(m, compute_qparams(m, bits, granularity), rounding);
}

Matrix dequantize(const QuantTensor& q) {
  Matrix out(q.rows(), q.cols());
  const auto codes = q.codes();
  for (std::size_t r = 0; r < q.rows(); ++r) {
    const float scale = q.params().scale_for_row(r);
    auto row = out.row(r);
    for (std::size_t c = 0; c < q.cols(); ++c) row[c] = static_cast<float>(codes[r * q.cols() + c]) * scale;
  }
  return out;
}

std::vector<std::uint8_t> pack_nibbles(std::span<const std::int8_t> codes) {
  std::vector<std::uint8_t> out((codes.size() + 1) / 2, 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const int c = codes[i];
    if (c < -8 || c > 7) throw std::out_of_range("pack_nibbles: code " + std::to_string(c) + " outside [-8, 7]");
    const auto nib = static_cast<std::uint8_t>(c & 0x0F);
    out[i / 2] |= (i % 2 == 0) ? nib : static_cast<std::uint8_t>(nib << 4);
  }
  return out;
}

std::vector<std::int8_t> unpack_nibbles(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (count > bytes.size() * 2) throw std::out_of_range("unpack_nibbles: count exceeds available nibbles");
  std::vector<std::int8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t nib = (i % 2 == 0) ? (bytes[i / 2] & 0x0Fu) : (bytes[i / 2] >> 4);
    out[i] = static_cast<std::int8_t>((nib & 0x8u) ? static_cast<int>(nib) - 16 : static_cast<int>(nib));
  }
  return out;
}

void write_quant_tensor(std::ostream& os, const QuantTensor& q) {
  io::write_magic(os, "HOTQ");
  io::write_u8(os, static_cast<std::uint8_t>(q.bits()));
  io::write_u8(os, static_cast<std::uint8_t>(q.params().granularity));
  io::write_u32(os, static_cast<std::uint32_t>(q.rows()));
  io::write_u32(os, static_cast<std::uint32_t>(q.cols()));
  for (float s : q.params().scales) io::write_f32(os, s);
  os.write(reinterpret_cast<const char*>(q.payload().data()), static_cast<std::streamsize>(q.payload().size()));
}

QuantTensor read_quant_tensor(std::istream& is) {
  io::expect_magic(is, "HOTQ");
  QuantTensor q;
  q.params_.bits = io::read_u8(is);
  if (q.params_.bits != 4 && q.params_.bits != 8) throw DataError("HOTQ: unsupported bit width");
  const std::uint8_t gran = io::read_u8(is);
  if (gran > 1) throw DataError("HOTQ: unknown granularity tag");
  q.params_.granularity = static_cast<Granularity>(gran);
  q.rows_ = io::read_u32(is);
  q.cols_ = io::read_u32(is);
  const std::size_t nscales = q.params_.granularity == Granularity::PerTensor ? 1 : q.rows_;
  q.params_.scales.resize(nscales);
  for (float& s : q.params_.scales) {
    s = io::read_f32(is);
    if (!(s > 0.0f) || !std::isfinite(s)) throw DataError("HOTQ: non-positive scale");
  }
  q.payload_.resize(q.rows_ * row_stride(q.cols_, q.params_.bits));
  if (!is.read(reinterpret_cast<char*>(q.payload_.data()), static_cast<std::streamsize>(q.payload_.size()))) {
    throw DataError("HOTQ: truncated payload");
  }
  const int qmax = q.params_.qmax();
  for (int c : q.codes()) {
    if (c > qmax || c < -qmax) throw DataError("HOTQ: code outside symmetric range");
  }
  return q;
}

std::size_t quant_tensor_record_bytes(const QuantTensor& q) {
  return 4 + 1 + 1 + 4 + 4 + 4 * q.params().scales.size() + q.payload().size();
}

}  // namespace hot
