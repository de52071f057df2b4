// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/layers.hpp"

#include <cmath>
#include <numbers>

#include "hot/errors.hpp"

namespace hot {
namespace {

void require_finite(const Matrix& m, const std::string& who, const char* what) {
  if (!all_finite(m)) throw TrainingError("non-finite " + std::string(what) + " in layer '" + who + "'");
}

Matrix columns(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r).subspan(first, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix rows_of(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(count, m.cols());
  const auto src = m.data().subspan(first * m.cols(), count * m.cols());
  std::copy(src.begin(), src.end(), out.data().begin());
  return out;
}

void put_rows(Matrix& dst, std::size_t first, const Matrix& src, std::size_t col_offset = 0) {
  for (std::size_t r = 0; r < src.rows(); ++r) {
    const auto s = src.row(r);
    std::copy(s.begin(), s.end(), dst.row(first + r).begin() + static_cast<std::ptrdiff_t>(col_offset));
  }
}

bool compresses(GwMode m) { return m == GwMode::HlaInt8 || m == GwMode::HlaFp; }

}  // namespace

std::string to_string(ExecMode m) { return m == ExecMode::Hot ? "hot" : "fp"; }

ExecMode parse_exec_mode(const std::string& s) {
  if (s == "hot") return ExecMode::Hot;
  if (s == "fp" || s == "fp_oracle") return ExecMode::FpOracle;
  throw ConfigError("unknown mode '" + s + "' (expected fp or hot)");
}

// ---- Linear ---------------------------------------------------------------

Linear::Linear(LinearLayer layer, BackwardConfig cfg) : layer_(std::move(layer)), cfg_(cfg) {
  cfg_.validate();
  if (layer_.weight.empty()) throw DimensionError("Linear '" + layer_.id + "': empty weight");
}

void Linear::set_config(const BackwardConfig& cfg) {
  cfg.validate();
  cfg_ = cfg;
}

BackwardConfig Linear::effective_config(const StepContext& ctx) const {
  if (ctx.mode == ExecMode::FpOracle) {
    BackwardConfig fp = BackwardConfig::fp();
    fp.hadamard = cfg_.hadamard;
    return fp;
  }
  BackwardConfig c = cfg_;
  if (ctx.int8_warmup && (c.gx_mode == GxMode::HqInt4 || c.gx_mode == GxMode::QInt4)) c.gx_mode = GxMode::HqInt8;
  if (ctx.int8_warmup && c.gw_mode == GwMode::HqInt4) c.gw_mode = GwMode::HlaInt8;
  return c;
}

Matrix Linear::forward(const Matrix& x, const StepContext& ctx) {
  Matrix y = hot::forward(layer_, x);
  require_finite(y, layer_.id, "forward output");
  saved_x_.reset();
  saved_compressed_.reset();
  spilled_.reset();
  last_rows_ = x.rows();

  const BackwardConfig eff = effective_config(ctx);
  if (!layer_.lora && ctx.compress_activations && compresses(eff.gw_mode)) {
    CompressedActivation c = compress_activation(x, layer_.id, eff);
    stored_bytes_ = buffer_bytes(c);
    if (ctx.spill_dir) {
      const auto path = *ctx.spill_dir / (layer_.id + ".hota");
      spill_compressed(path, c);
      spilled_ = path;
    } else {
      saved_compressed_ = std::move(c);
    }
  } else {
    stored_bytes_ = 4 * x.size();
    saved_x_ = x;
  }
  return y;
}

Matrix Linear::backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) {
  if (!saved_x_ && !saved_compressed_ && !spilled_) {
    throw std::logic_error("Linear '" + layer_.id + "': backward without a preceding forward");
  }
  if (ctx.capture_gy) captured_gy_.push_back(gy);
  const BackwardConfig eff = effective_config(ctx);
  Matrix gx;

  if (layer_.lora) {
    LoraGrads g = lora_backward(layer_, gy, *saved_x_, eff);
    grad_a_ = std::move(g.ga);
    grad_b_ = std::move(g.gb);
    if (g.gw) grad_w_ = std::move(*g.gw);
    gx = std::move(g.gx);
    require_finite(grad_a_, layer_.id, "adapter gradient");
    require_finite(grad_b_, layer_.id, "adapter gradient");
  } else {
    if (spilled_) {
      grad_w_ = gw_from_compressed(gy, load_compressed(*spilled_), eff);
      std::filesystem::remove(*spilled_);
    } else if (saved_compressed_) {
      grad_w_ = gw_from_compressed(gy, *saved_compressed_, eff);
    } else {
      grad_w_ = hot_gw(gy, *saved_x_, eff);
    }
    if (need_input_grad) gx = hot_gx(gy, layer_.weight, eff);
  }
  if (!grad_w_.empty()) require_finite(grad_w_, layer_.id, "weight gradient");
  if (!gx.empty()) require_finite(gx, layer_.id, "input gradient");

  saved_x_.reset();
  saved_compressed_.reset();
  spilled_.reset();
  return gx;
}

void Linear::collect_params(std::vector<ParamRef>& out) {
  if (layer_.lora) {
    out.push_back({layer_.id + ".lora_a", &layer_.lora->a, &grad_a_});
    out.push_back({layer_.id + ".lora_b", &layer_.lora->b, &grad_b_});
    if (layer_.lora->frozen_base) return;
  }
  out.push_back({layer_.id + ".weight", &layer_.weight, &grad_w_});
}

// ---- Elementwise ----------------------------------------------------------

Matrix Relu::forward(const Matrix& x, const StepContext&) {
  Matrix y = x;
  mask_ = Matrix(x.rows(), x.cols());
  auto yd = y.data();
  auto md = mask_.data();
  for (std::size_t i = 0; i < yd.size(); ++i) {
    if (yd[i] > 0.0f) {
      md[i] = 1.0f;
    } else {
      yd[i] = 0.0f;
    }
  }
  return y;
}

Matrix Relu::backward(const Matrix& gy, const StepContext&, bool) {
  Matrix g = gy;
  auto gd = g.data();
  const auto md = mask_.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= md[i];
  return g;
}

Matrix Gelu::forward(const Matrix& x, const StepContext&) {
  x_ = x;
  Matrix y(x.rows(), x.cols());
  const auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double v = xd[i];
    yd[i] = static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)));
  }
  return y;
}

Matrix Gelu::backward(const Matrix& gy, const StepContext&, bool) {
  Matrix g(gy.rows(), gy.cols());
  const auto xd = x_.data();
  const auto gyd = gy.data();
  auto gd = g.data();
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < gd.size(); ++i) {
    const double v = xd[i];
    const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
    gd[i] = static_cast<float>(gyd[i] * (cdf + v * pdf));
  }
  return g;
}

MeanPool::MeanPool(std::string name, std::size_t tokens) : name_(std::move(name)), tokens_(tokens) {
  if (tokens_ == 0) throw std::invalid_argument("MeanPool: tokens must be positive");
}

Matrix MeanPool::forward(const Matrix& x, const StepContext&) {
  if (x.rows() % tokens_ != 0) {
    throw DimensionError("MeanPool: " + std::to_string(x.rows()) + " rows is not a multiple of " +
                         std::to_string(tokens_) + " tokens");
  }
  const std::size_t batch = x.rows() / tokens_;
  Matrix y(batch, x.cols());
  for (std::size_t b = 0; b < batch; ++b) {
    auto out = y.row(b);
    for (std::size_t t = 0; t < tokens_; ++t) {
      const auto in = x.row(b * tokens_ + t);
      for (std::size_t c = 0; c < x.cols(); ++c) out[c] += in[c];
    }
    for (float& v : out) v /= static_cast<float>(tokens_);
  }
  return y;
}

Matrix MeanPool::backward(const Matrix& gy, const StepContext&, bool) {
  Matrix g(gy.rows() * tokens_, gy.cols());
  const float inv = 1.0f / static_cast<float>(tokens_);
  for (std::size_t b = 0; b < gy.rows(); ++b) {
    const auto src = gy.row(b);
    for (std::size_t t = 0; t < tokens_; ++t) {
      auto dst = g.row(b * tokens_ + t);
      for (std::size_t c = 0; c < gy.cols(); ++c) dst[c] = src[c] * inv;
    }
  }
  return g;
}

// ---- Transformer block ----------------------------------------------------

TransformerBlock::TransformerBlock(std::string name, std::size_t tokens, std::unique_ptr<Linear> qkv,
                                   std::unique_ptr<Linear> proj, std::unique_ptr<Linear> fc1,
                                   std::unique_ptr<Linear> fc2)
    : name_(std::move(name)),
      tokens_(tokens),
      qkv_(std::move(qkv)),
      proj_(std::move(proj)),
      fc1_(std::move(fc1)),
      fc2_(std::move(fc2)),
      gelu_(name_ + ".gelu") {
  const std::size_t d = qkv_->layer().in_features();
  if (qkv_->layer().out_features() != 3 * d || proj_->layer().in_features() != d ||
      proj_->layer().out_features() != d || fc1_->layer().in_features() != d ||
      fc2_->layer().in_features() != fc1_->layer().out_features() || fc2_->layer().out_features() != d) {
    throw DimensionError("TransformerBlock '" + name_ + "': linear shapes do not chain");
  }
}

Matrix TransformerBlock::forward(const Matrix& x, const StepContext& ctx) {
  const std::size_t d = qkv_->layer().in_features();
  if (x.rows() % tokens_ != 0) throw DimensionError("TransformerBlock: rows not a multiple of tokens");
  const std::size_t batch = x.rows() / tokens_;
  const Matrix qkv = qkv_->forward(x, ctx);
  q_ = columns(qkv, 0, d);
  k_ = columns(qkv, d, d);
  v_ = columns(qkv, 2 * d, d);

  const float inv_sqrt_d = static_cast<float>(1.0 / std::sqrt(static_cast<double>(d)));
  Matrix o(x.rows(), d);
  attn_.assign(batch, Matrix());
  for (std::size_t b = 0; b < batch; ++b) {
    Matrix s = scaled(matmul_nt(rows_of(q_, b * tokens_, tokens_), rows_of(k_, b * tokens_, tokens_)), inv_sqrt_d);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      auto row = s.row(i);
      const float mx = *std::max_element(row.begin(), row.end());
      double sum = 0.0;
      for (float& v : row) {
        v = static_cast<float>(std::exp(static_cast<double>(v) - mx));
        sum += v;
      }
      for (float& v : row) v = static_cast<float>(v / sum);
    }
    put_rows(o, b * tokens_, matmul(s, rows_of(v_, b * tokens_, tokens_)));
    attn_[b] = std::move(s);
  }
  const Matrix h = add(x, proj_->forward(o, ctx));
  return add(h, fc2_->forward(gelu_.forward(fc1_->forward(h, ctx), ctx), ctx));
}

Matrix TransformerBlock::backward(const Matrix& gy, const StepContext& ctx, bool need_input_grad) {
  const std::size_t d = qkv_->layer().in_features();
  const Matrix g_act = fc2_->backward(gy, ctx, true);
  Matrix g_h = add(gy, fc1_->backward(gelu_.backward(g_act, ctx, true), ctx, true));
  const Matrix g_o = proj_->backward(g_h, ctx, true);

  const float inv_sqrt_d = static_cast<float>(1.0 / std::sqrt(static_cast<double>(d)));
  Matrix g_qkv(gy.rows(), 3 * d);
  for (std::size_t b = 0; b < attn_.size(); ++b) {
    const std::size_t first = b * tokens_;
    const Matrix& a = attn_[b];
    const Matrix dout = rows_of(g_o, first, tokens_);
    const Matrix qb = rows_of(q_, first, tokens_);
    const Matrix kb = rows_of(k_, first, tokens_);
    const Matrix vb = rows_of(v_, first, tokens_);
    const Matrix dv = matmul_tn(a, dout);
    Matrix ds = matmul_nt(dout, vb);  // gradient w.r.t. the attention weights
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      auto drow = ds.row(i);
      const auto arow = a.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < drow.size(); ++j) dot += static_cast<double>(drow[j]) * arow[j];
      for (std::size_t j = 0; j < drow.size(); ++j)
        drow[j] = static_cast<float>(arow[j] * (drow[j] - dot)) * inv_sqrt_d;
    }
    put_rows(g_qkv, first, matmul(ds, kb), 0);
    put_rows(g_qkv, first, matmul_tn(ds, qb), d);
    put_rows(g_qkv, first, dv, 2 * d);
  }
  const Matrix g_x_attn = qkv_->backward(g_qkv, ctx, need_input_grad);
  if (!need_input_grad) return Matrix();
  add_inplace(g_h, g_x_attn);
  return g_h;
}

void TransformerBlock::collect_params(std::vector<ParamRef>& out) {
  qkv_->collect_params(out);
  proj_->collect_params(out);
  fc1_->collect_params(out);
  fc2_->collect_params(out);
}

void TransformerBlock::collect_linears(std::vector<Linear*>& out) {
  out.push_back(qkv_.get());
  out.push_back(proj_.get());
  out.push_back(fc1_.get());
  out.push_back(fc2_.get());
}

}  // namespace hot
