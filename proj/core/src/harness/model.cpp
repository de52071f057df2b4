// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/model.hpp"

#include <cmath>

#include "hot/errors.hpp"
#include "hot/rng.hpp"

namespace hot {
namespace {

std::unique_ptr<Linear> make_linear(const std::string& id, std::size_t out, std::size_t in, Rng& rng,
                                    const BackwardConfig& cfg) {
  return std::make_unique<Linear>(LinearLayer{he_normal(rng, out, in), id, std::nullopt}, cfg);
}

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("model needs at least an input and an output width");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("model widths must be positive");
}

}  // namespace

void Model::add(std::unique_ptr<Module> m) { modules_.push_back(std::move(m)); }

Matrix Model::forward(const Matrix& x, const StepContext& ctx) {
  Matrix h = x;
  for (auto& m : modules_) {
    h = m->forward(h, ctx);
    if (!all_finite(h)) throw TrainingError("non-finite activation produced by '" + m->name() + "'");
  }
  return h;
}

void Model::backward(const Matrix& gy, const StepContext& ctx) {
  Matrix g = gy;
  for (std::size_t i = modules_.size(); i-- > 0;) {
    g = modules_[i]->backward(g, ctx, i > 0);
    if (i > 0 && !all_finite(g)) throw TrainingError("non-finite gradient produced by '" + modules_[i]->name() + "'");
  }
}

std::vector<ParamRef> Model::params() {
  std::vector<ParamRef> out;
  for (auto& m : modules_) m->collect_params(out);
  return out;
}

std::vector<Linear*> Model::linears() {
  std::vector<Linear*> out;
  for (auto& m : modules_) m->collect_linears(out);
  return out;
}

std::vector<std::string> Model::linear_ids() {
  std::vector<std::string> ids;
  for (Linear* l : linears()) ids.push_back(l->layer().id);
  return ids;
}

void Model::apply_policy(const QuantPolicy& policy) {
  check_policy_covers(policy, linear_ids());
  for (Linear* l : linears()) {
    BackwardConfig c = l->config();
    c.gy_granularity = *policy.find(l->layer().id);
    l->set_config(c);
  }
}

void Model::set_backward_config(const BackwardConfig& cfg) {
  for (Linear* l : linears()) l->set_config(cfg);
}

Matrix he_normal(Rng& rng, std::size_t out, std::size_t in) {
  return random_matrix(rng, out, in, Normal{0.0, std::sqrt(2.0 / static_cast<double>(in))});
}

Model build_mlp(const std::vector<std::size_t>& dims, Rng& rng, const BackwardConfig& cfg) {
  check_dims(dims);
  Model m;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    m.add(make_linear("fc" + std::to_string(i), dims[i + 1], dims[i], rng, cfg));
    if (i + 2 < dims.size()) m.add(std::make_unique<Relu>("relu" + std::to_string(i)));
  }
  return m;
}

Model build_lora_mlp(const std::vector<std::size_t>& dims, std::size_t lora_rank, Rng& rng,
                     const BackwardConfig& cfg) {
  check_dims(dims);
  if (lora_rank == 0) throw std::invalid_argument("LoRA rank must be positive");
  Model m;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t out = dims[i + 1];
    const std::size_t in = dims[i];
    LinearLayer layer{he_normal(rng, out, in), "fc" + std::to_string(i), std::nullopt};
    Matrix b = random_matrix(rng, lora_rank, in, Normal{0.0, 1.0 / std::sqrt(static_cast<double>(in))});
    layer.lora = LoraAdapter{Matrix(out, lora_rank), std::move(b), true};
    m.add(std::make_unique<Linear>(std::move(layer), cfg));
    if (i + 2 < dims.size()) m.add(std::make_unique<Relu>("relu" + std::to_string(i)));
  }
  return m;
}

Model build_transformer(const TransformerShape& s, Rng& rng, const BackwardConfig& cfg) {
  if (s.tokens == 0 || s.blocks == 0 || s.classes == 0) throw std::invalid_argument("transformer shape must be positive");
  Model m;
  m.add(make_linear("embed", s.model_dim, s.input_dim, rng, cfg));
  for (std::size_t b = 0; b < s.blocks; ++b) {
    const std::string p = "block" + std::to_string(b);
    auto small = [&](const std::string& id, std::size_t out, std::size_t in, double gain) {
      return std::make_unique<Linear>(
          LinearLayer{random_matrix(rng, out, in, Normal{0.0, gain / std::sqrt(static_cast<double>(in))}), id,
                      std::nullopt},
          cfg);
    };
    m.add(std::make_unique<TransformerBlock>(p, s.tokens, small(p + ".qkv", 3 * s.model_dim, s.model_dim, 1.0),
                                             small(p + ".proj", s.model_dim, s.model_dim, 0.5),
                                             small(p + ".fc1", s.hidden_dim, s.model_dim, 1.0),
                                             small(p + ".fc2", s.model_dim, s.hidden_dim, 0.5)));
  }
  m.add(std::make_unique<MeanPool>("pool", s.tokens));
  m.add(make_linear("head", s.classes, s.model_dim, rng, cfg));
  return m;
}

}  // namespace hot
