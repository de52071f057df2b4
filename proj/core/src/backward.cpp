// SPDX-License-Identifier: Apache-2.0
#include "hot/backward.hpp"

#include <stdexcept>

#include "hot/errors.hpp"
#include "hot/igemm.hpp"

namespace hot {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void check_gx_shapes(const Matrix& gy, const Matrix& w) {
  require(gy.cols() == w.rows(), "g_x: g_y " + gy.shape_string() + " does not match weight " + w.shape_string());
}

void check_gw_shapes(const Matrix& gy, const Matrix& x) {
  require(gy.rows() == x.rows(), "g_w: g_y " + gy.shape_string() + " and x " + x.shape_string() + " differ in L");
}

// Integer product of two FP operands quantized per tensor.
Matrix quantized_product(const Matrix& a, const Matrix& b, int bits, Rounding rounding) {
  const QuantTensor qa = quantize(a, bits, Granularity::PerTensor, rounding);
  const QuantTensor qb = quantize(b, bits, Granularity::PerTensor, rounding);
  return apply_scales(gemm_int(qa, qb), qa.params(), qb.params());
}

// gyr is the reduced g_y (L' × O); xq the INT8 reduced activation (L' × I).
Matrix int8_gw(const Matrix& gyr, const QuantTensor& xq, const BackwardConfig& cfg) {
  if (cfg.gy_granularity == GyGranularity::PerTensor) {
    const QuantTensor qg = quantize(transpose(gyr), 8, Granularity::PerTensor, cfg.gy_rounding);
    return apply_scales(gemm_int(qg, xq), qg.params(), xq.params());
  }
  if (cfg.token_axis == TokenAxis::OutputO) {
    const QuantTensor qg = quantize(transpose(gyr), 8, Granularity::PerRow, cfg.gy_rounding);
    return apply_scales(gemm_int(qg, xq), qg.params(), xq.params(), RowScaleMode::OutputRows);
  }
  // One scale per reduced-L row; those rows are contracted by the GEMM, so the
  // scales ride along the sum instead of being applied afterwards.
  const QuantTensor qrows = quantize(gyr, 8, Granularity::PerRow, cfg.gy_rounding);
  const auto codes = qrows.codes();
  const std::size_t lr = gyr.rows();
  const std::size_t o = gyr.cols();
  std::vector<std::int8_t> transposed(codes.size());
  for (std::size_t l = 0; l < lr; ++l)
    for (std::size_t c = 0; c < o; ++c) transposed[c * lr + l] = codes[l * o + c];
  const QuantTensor qg = QuantTensor::from_codes(o, lr, transposed, QParams{8, Granularity::PerTensor, {1.0f}});
  return gemm_int_rowscaled(qg, xq, qrows.params().scales);
}

bool is_hla_gw(GwMode m) { return m == GwMode::HlaInt8 || m == GwMode::HlaFp; }

}  // namespace

BackwardConfig BackwardConfig::fp() {
  BackwardConfig c;
  c.gx_mode = GxMode::Fp;
  c.gw_mode = GwMode::Fp;
  return c;
}

BackwardConfig BackwardConfig::hot() { return BackwardConfig{}; }

void BackwardConfig::validate() const { hadamard.validate(); }

std::string to_string(GxMode m) {
  switch (m) {
    case GxMode::Fp: return "fp";
    case GxMode::HqInt4: return "hq_int4";
    case GxMode::HqInt8: return "hq_int8";
    case GxMode::HqExact: return "hq_exact";
    case GxMode::QInt4: return "q_int4";
    case GxMode::ExternalHla: return "external_hla";
    case GxMode::InternalHla: return "internal_hla";
  }
  return "?";
}

std::string to_string(GwMode m) {
  switch (m) {
    case GwMode::Fp: return "fp";
    case GwMode::HlaInt8: return "hla_int8";
    case GwMode::HlaFp: return "hla_fp";
    case GwMode::HqInt4: return "hq_int4";
  }
  return "?";
}

std::string to_string(GyGranularity g) { return g == GyGranularity::PerToken ? "per_token" : "per_tensor"; }

GxMode parse_gx_mode(const std::string& s) {
  for (GxMode m : {GxMode::Fp, GxMode::HqInt4, GxMode::HqInt8, GxMode::HqExact, GxMode::QInt4, GxMode::ExternalHla,
                   GxMode::InternalHla}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown g_x mode '" + s + "'");
}

GwMode parse_gw_mode(const std::string& s) {
  for (GwMode m : {GwMode::Fp, GwMode::HlaInt8, GwMode::HlaFp, GwMode::HqInt4}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown g_w mode '" + s + "'");
}

GyGranularity parse_gy_granularity(const std::string& s) {
  if (s == "per_tensor") return GyGranularity::PerTensor;
  if (s == "per_token") return GyGranularity::PerToken;
  throw ConfigError("unknown granularity '" + s + "'");
}

Matrix forward(const LinearLayer& layer, const Matrix& x) {
  require(x.cols() == layer.in_features(),
          "forward: input " + x.shape_string() + " does not match weight " + layer.weight.shape_string());
  Matrix y = matmul_nt(x, layer.weight);
  if (layer.lora) add_inplace(y, matmul_nt(matmul_nt(x, layer.lora->b), layer.lora->a));
  return y;
}

GradPair fp_backward(const Matrix& gy, const Matrix& x, const Matrix& w) {
  check_gx_shapes(gy, w);
  check_gw_shapes(gy, x);
  require(x.cols() == w.cols(), "fp_backward: x " + x.shape_string() + " does not match weight " + w.shape_string());
  return {matmul(gy, w), matmul_tn(gy, x)};
}

Matrix hot_gx(const Matrix& gy, const Matrix& w, const BackwardConfig& cfg) {
  check_gx_shapes(gy, w);
  const HadamardConfig& h = cfg.hadamard;
  switch (cfg.gx_mode) {
    case GxMode::Fp:
      return matmul(gy, w);
    case GxMode::HqExact:
      return matmul(block_ht(gy, Axis::Cols, h), block_ht(w, Axis::Rows, h));
    case GxMode::HqInt4:
    case GxMode::HqInt8:
      return quantized_product(block_ht(gy, Axis::Cols, h), block_ht(w, Axis::Rows, h),
                               cfg.gx_mode == GxMode::HqInt4 ? 4 : 8, cfg.gy_rounding);
    case GxMode::QInt4:
      return quantized_product(gy, w, 4, cfg.gy_rounding);
    case GxMode::ExternalHla:
      return hla_lift(matmul(hla_reduce(gy, Axis::Rows, h), w), Axis::Rows, h, gy.rows());
    case GxMode::InternalHla:
      return matmul(hla_reduce(gy, Axis::Cols, h), hla_reduce(w, Axis::Rows, h));
  }
  throw std::logic_error("hot_gx: unhandled mode");
}

ReducedActivation reduce_activation(const Matrix& x, const BackwardConfig& cfg) {
  if (!is_hla_gw(cfg.gw_mode)) throw std::invalid_argument("reduce_activation: g_w mode is not low-rank");
  Matrix xr = hla_reduce(x, Axis::Rows, cfg.hadamard);
  if (cfg.gw_mode == GwMode::HlaFp) return {x.rows(), std::move(xr)};
  return {x.rows(), quantize(xr, 8, Granularity::PerTensor, cfg.x_rounding)};
}

Matrix hot_gw_from_reduced(const Matrix& gy, const ReducedActivation& x, const BackwardConfig& cfg) {
  if (!is_hla_gw(cfg.gw_mode)) throw std::invalid_argument("hot_gw_from_reduced: g_w mode is not low-rank");
  require(gy.rows() == x.original_L, "g_w: g_y has " + std::to_string(gy.rows()) + " rows, activation had " +
                                         std::to_string(x.original_L));
  const Matrix gyr = hla_reduce(gy, Axis::Rows, cfg.hadamard);
  if (cfg.gw_mode == GwMode::HlaFp) {
    const auto* xr = std::get_if<Matrix>(&x.payload);
    if (xr == nullptr) throw std::invalid_argument("hot_gw_from_reduced: unquantized mode needs an FP activation");
    return matmul_tn(gyr, *xr);
  }
  const auto* xq = std::get_if<QuantTensor>(&x.payload);
  if (xq == nullptr || xq->bits() != 8) {
    throw std::invalid_argument("hot_gw_from_reduced: INT8 mode needs an INT8 activation");
  }
  require(xq->rows() == gyr.rows(), "g_w: reduced activation rows " + std::to_string(xq->rows()) +
                                        " do not match reduced g_y rows " + std::to_string(gyr.rows()));
  return int8_gw(gyr, *xq, cfg);
}

Matrix hot_gw(const Matrix& gy, const Matrix& x, const BackwardConfig& cfg) {
  check_gw_shapes(gy, x);
  switch (cfg.gw_mode) {
    case GwMode::Fp:
      return matmul_tn(gy, x);
    case GwMode::HlaInt8:
    case GwMode::HlaFp:
      return hot_gw_from_reduced(gy, reduce_activation(x, cfg), cfg);
    case GwMode::HqInt4:
      return quantized_product(transpose(block_ht(gy, Axis::Rows, cfg.hadamard)),
                               block_ht(x, Axis::Rows, cfg.hadamard), 4, cfg.gy_rounding);
  }
  throw std::logic_error("hot_gw: unhandled mode");
}

GradPair hot_backward(const Matrix& gy, const Matrix& x, const Matrix& w, const BackwardConfig& cfg) {
  require(x.cols() == w.cols(), "backward: x " + x.shape_string() + " does not match weight " + w.shape_string());
  return {hot_gx(gy, w, cfg), hot_gw(gy, x, cfg)};
}

GradPair analysis_backward(const Matrix& gy, const Matrix& x, const Matrix& w, const BackwardConfig& cfg) {
  if (cfg.gx_mode != GxMode::Fp && cfg.gw_mode != GwMode::Fp) {
    throw std::invalid_argument("analysis_backward: approximate at most one path (g_x is " + to_string(cfg.gx_mode) +
                                ", g_w is " + to_string(cfg.gw_mode) + ")");
  }
  return hot_backward(gy, x, w, cfg);
}

LoraGrads lora_backward(const LinearLayer& layer, const Matrix& gy, const Matrix& x, const BackwardConfig& cfg) {
  if (!layer.lora) throw std::invalid_argument("lora_backward: layer '" + layer.id + "' has no adapter");
  const LoraAdapter& ad = *layer.lora;
  require(ad.a.rows() == layer.out_features() && ad.b.cols() == layer.in_features() && ad.a.cols() == ad.b.rows(),
          "lora_backward: adapter shapes " + ad.a.shape_string() + ", " + ad.b.shape_string() +
              " do not fit weight " + layer.weight.shape_string());
  const Matrix gy_a = matmul(gy, ad.a);   // L × rank
  const Matrix x_bt = matmul_nt(x, ad.b);  // L × rank
  LoraGrads g;
  g.gx = hot_gx(gy, layer.weight, cfg);
  add_inplace(g.gx, matmul(gy_a, ad.b));
  g.ga = matmul_tn(gy, x_bt);
  g.gb = matmul_tn(gy_a, x);
  if (!ad.frozen_base) g.gw = hot_gw(gy, x, cfg);
  return g;
}

}  // namespace hot
