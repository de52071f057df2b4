// SPDX-License-Identifier: Apache-2.0
#include "hot/igemm.hpp"

#include <string>

#include "hot/errors.hpp"
#include "hot/op_counter.hpp"
#include "hot/parallel.hpp"

namespace hot {
namespace {

void check_operands(const QuantTensor& a, const QuantTensor& b, const char* op) {
  if (a.bits() != b.bits()) {
    throw std::invalid_argument(std::string(op) + ": bit widths differ (" + std::to_string(a.bits()) + " vs " +
                                std::to_string(b.bits()) + ")");
  }
  if (a.cols() != b.rows()) {
    throw DimensionError(std::string(op) + ": inner dimensions differ, " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " · " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.cols() > kMaxInnerDim) {
    throw std::overflow_error(std::string(op) + ": inner dimension " + std::to_string(a.cols()) +
                              " exceeds the int32 accumulator guard " + std::to_string(kMaxInnerDim));
  }
}

void count_dequantized(std::size_t n) {
  if (auto* c = detail::active_op_counts()) c->dequantized_elements += n;
}

}  // namespace

AccumMatrix gemm_int(const QuantTensor& a, const QuantTensor& b) {
  check_operands(a, b, "gemm_int");
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t k = b.cols();
  const auto ac = a.codes();
  const auto bc = b.codes();
  AccumMatrix out{m, k, std::vector<std::int32_t>(m * k, 0)};
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::int32_t* orow = out.data.data() + i * k;
      for (std::size_t p = 0; p < n; ++p) {
        const std::int32_t av = ac[i * n + p];
        if (av == 0) continue;
        const std::int8_t* brow = bc.data() + p * k;
        for (std::size_t j = 0; j < k; ++j) orow[j] += av * static_cast<std::int32_t>(brow[j]);
      }
    }
  });
  return out;
}

Matrix apply_scales(const AccumMatrix& acc, const QParams& a_params, const QParams& b_params,
                    RowScaleMode a_row_scales) {
  if (a_params.granularity == Granularity::PerRow) {
    if (a_row_scales == RowScaleMode::Contracted) {
      throw std::invalid_argument(
          "apply_scales: contracted-dimension scales do not factor out of the sum; use gemm_int_rowscaled");
    }
    if (a_params.scales.size() != acc.rows) throw DimensionError("apply_scales: row scale count mismatch");
  }
  if (b_params.granularity != Granularity::PerTensor) {
    throw std::invalid_argument("apply_scales: right operand must be per-tensor");
  }
  const double sb = b_params.scales.front();
  Matrix out(acc.rows, acc.cols);
  for (std::size_t r = 0; r < acc.rows; ++r) {
    const double sa = a_params.scale_for_row(r);
    auto orow = out.row(r);
    for (std::size_t c = 0; c < acc.cols; ++c) orow[c] = static_cast<float>(static_cast<double>(acc(r, c)) * sa * sb);
  }
  count_dequantized(out.size());
  return out;
}

Matrix gemm_int_rowscaled(const QuantTensor& a, const QuantTensor& b, std::span<const float> contracted_scales) {
  check_operands(a, b, "gemm_int_rowscaled");
  if (contracted_scales.size() != a.cols()) {
    throw DimensionError("gemm_int_rowscaled: " + std::to_string(contracted_scales.size()) +
                         " contracted scales for inner dimension " + std::to_string(a.cols()));
  }
  if (a.params().granularity != Granularity::PerTensor || b.params().granularity != Granularity::PerTensor) {
    throw std::invalid_argument("gemm_int_rowscaled: operands must carry per-tensor scales");
  }
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t k = b.cols();
  const auto ac = a.codes();
  const auto bc = b.codes();
  const double sa = a.params().scales.front();
  const double sb = b.params().scales.front();
  Matrix out(m, k);
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(k);
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t p = 0; p < n; ++p) {
        const std::int32_t av = ac[i * n + p];
        if (av == 0) continue;
        const double cs = contracted_scales[p];
        const std::int8_t* brow = bc.data() + p * k;
        for (std::size_t j = 0; j < k; ++j) acc[j] += cs * static_cast<double>(av * static_cast<std::int32_t>(brow[j]));
      }
      auto orow = out.row(i);
      for (std::size_t j = 0; j < k; ++j) orow[j] = static_cast<float>(acc[j] * sa * sb);
    }
  });
  count_dequantized(out.size());
  return out;
}

}  // namespace hot
