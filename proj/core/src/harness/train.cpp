// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "hot/errors.hpp"
#include "hot/harness/loss.hpp"
#include "hot/rng.hpp"
#include "json_util.hpp"

namespace hot {
namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kFeatureStream = 2;
constexpr std::uint64_t kInitStream = 3;

int gx_bits_of(GxMode m) {
  switch (m) {
    case GxMode::HqInt4:
    case GxMode::QInt4: return 4;
    case GxMode::HqInt8: return 8;
    default: return 32;
  }
}

int gw_bits_of(GwMode m) {
  switch (m) {
    case GwMode::HlaInt8: return 8;
    case GwMode::HqInt4: return 4;
    default: return 32;
  }
}

bool low_rank_gw(GwMode m) { return m == GwMode::HlaInt8 || m == GwMode::HlaFp; }

std::vector<LayerRecord> snapshot_layers(Model& model) {
  std::vector<LayerRecord> out;
  for (Linear* l : model.linears()) {
    const BackwardConfig& c = l->config();
    const auto& layer = l->layer();
    out.push_back({layer.id, layer.in_features(), layer.out_features(), to_string(c.gx_mode), to_string(c.gw_mode),
                   to_string(c.gy_granularity), layer.lora.has_value(), layer.lora && layer.lora->frozen_base,
                   l->stored_activation_bytes()});
  }
  return out;
}

// Cost of the configured scheme, whatever mode the run used. Bit widths come
// from the first linear layer.
CostReport layer_costs(Model& model) {
  std::vector<NamedDims> dims;
  PathBits bits{32, 32, 32};
  bool first = true;
  for (Linear* l : model.linears()) {
    const BackwardConfig& c = l->config();
    if (first) {
      bits.gx = gx_bits_of(c.gx_mode);
      bits.gw = gw_bits_of(c.gw_mode);
      first = false;
    }
    const std::size_t rank = low_rank_gw(c.gw_mode) ? c.hadamard.rank : c.hadamard.tile;
    dims.push_back({l->layer().id, LayerDims{l->last_input_rows(), l->layer().out_features(),
                                             l->layer().in_features(), c.hadamard.tile, rank}});
  }
  return cost_report(dims, bits);
}

}  // namespace

double evaluate_accuracy(Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) return 0.0;
  StepContext ctx;
  ctx.mode = ExecMode::FpOracle;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Dataset b = subset(data, idx);
    correct += count_correct(model.forward(b.inputs, ctx), b.labels);
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainRecord train(Model& model, const Dataset& data, const TrainOptions& opts) {
  data.validate();
  if (data.size() == 0) throw DataError("cannot train on an empty dataset");
  if (opts.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  TrainRecord rec;
  rec.seed = opts.seed;
  rec.mode = to_string(opts.mode);
  Rng order_rng = Rng(opts.seed).split(kShuffleStream);
  Optimizer optimizer(opts.optimizer, opts.adamw);
  const std::vector<ParamRef> params = model.params();
  const std::size_t steps_per_epoch = (data.size() + opts.batch_size - 1) / opts.batch_size;
  const std::size_t total_steps = steps_per_epoch * opts.epochs;
  std::vector<std::size_t> order(data.size());
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    StepContext ctx;
    ctx.mode = opts.mode;
    ctx.int8_warmup = epoch < opts.warmup_epochs;
    ctx.compress_activations = opts.compress_activations;
    ctx.spill_dir = opts.spill_dir;

    std::iota(order.begin(), order.end(), 0);
    shuffle(order, order_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      const std::size_t start = b * opts.batch_size;
      const std::size_t end = std::min(data.size(), start + opts.batch_size);
      const Dataset batch = subset(data, std::span(order).subspan(start, end - start));
      const Matrix logits = model.forward(batch.inputs, ctx);
      const LossResult loss = softmax_cross_entropy(logits, batch.labels);
      if (!std::isfinite(loss.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(b));
      }
      if (step == 0) rec.layers = snapshot_layers(model);
      model.backward(loss.grad, ctx);
      const double lr = opts.cosine_schedule ? cosine_lr(opts.lr, step, total_steps) : opts.lr;
      optimizer.step(params, lr);
      loss_sum += loss.loss;
      ++step;
    }
    if (step == steps_per_epoch) rec.cost = layer_costs(model);
    rec.epochs.push_back({epoch, loss_sum / static_cast<double>(steps_per_epoch),
                          evaluate_accuracy(model, data, opts.batch_size), ctx.int8_warmup});
  }
  if (opts.epochs == 0) rec.layers = snapshot_layers(model);
  rec.final_accuracy = rec.epochs.empty() ? evaluate_accuracy(model, data, opts.batch_size)
                                          : rec.epochs.back().accuracy;
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::string cost_report_json(const CostReport& rep) { return detail::to_json(rep).dump(2) + "\n"; }

std::string train_record_json(const TrainRecord& rec) {
  using detail::Json;
  Json j;
  j["seed"] = rec.seed;
  j["mode"] = rec.mode;
  Json cfg = Json::object();
  for (const auto& [k, v] : rec.config) cfg[k] = v;
  j["config"] = std::move(cfg);
  Json epochs = Json::array();
  for (const auto& e : rec.epochs) {
    epochs.push_back(Json{{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}, {"int8_warmup", e.int8_warmup}});
  }
  j["epochs"] = std::move(epochs);
  Json layers = Json::array();
  for (const auto& l : rec.layers) {
    layers.push_back(Json{{"id", l.id},
                          {"in_features", l.in_features},
                          {"out_features", l.out_features},
                          {"gx_mode", l.gx_mode},
                          {"gw_mode", l.gw_mode},
                          {"gy_granularity", l.gy_granularity},
                          {"lora", l.lora},
                          {"frozen_base", l.frozen_base},
                          {"activation_bytes", l.activation_bytes}});
  }
  j["layers"] = std::move(layers);
  j["cost"] = detail::to_json(rec.cost);
  j["policy"] = rec.policy ? detail::to_json(*rec.policy) : Json(nullptr);
  j["final_accuracy"] = rec.final_accuracy;
  return j.dump(2) + "\n";
}

Dataset make_dataset(const RunConfig& cfg) {
  const std::size_t input_dim = cfg.dims.front();
  if (cfg.dataset == "spirals") {
    Dataset d = make_spirals(cfg.samples, cfg.noise, cfg.seed);
    if (input_dim != 2) {
      d.inputs = fourier_features(d.inputs, input_dim, cfg.feature_sigma, Rng(cfg.seed).split(kFeatureStream).next_u64());
    }
    return d;
  }
  if (cfg.dataset == "tokens") return make_token_task(cfg.samples, cfg.tokens, input_dim, cfg.dims.back(), cfg.seed);
  Dataset d = load_idx(cfg.idx_images, cfg.idx_labels);
  if (d.inputs.cols() != input_dim) {
    throw ConfigError("dims[0] = " + std::to_string(input_dim) + " but IDX samples have " +
                      std::to_string(d.inputs.cols()) + " features");
  }
  return d;
}

Model make_model(const RunConfig& cfg, std::size_t input_dim, std::size_t classes) {
  std::vector<std::size_t> dims = cfg.dims;
  dims.front() = input_dim;
  dims.back() = classes;
  Rng rng = Rng(cfg.seed).split(kInitStream);
  const BackwardConfig base = cfg.defaults.to_backward_config();
  Model m;
  if (cfg.model == "mlp") {
    m = build_mlp(dims, rng, base);
  } else if (cfg.model == "lora_mlp") {
    m = build_lora_mlp(dims, cfg.lora_rank, rng, base);
  } else {
    m = build_transformer({cfg.tokens, input_dim, cfg.model_dim, cfg.hidden_dim, cfg.blocks, classes}, rng, base);
  }
  std::set<std::string> ids;
  for (Linear* l : m.linears()) {
    ids.insert(l->layer().id);
    l->set_config(cfg.backward_config_for(l->layer().id));
  }
  for (const auto& [id, s] : cfg.layers) {
    if (!ids.count(id)) throw ConfigError("config section [layer." + id + "] names no layer of the model");
  }
  return m;
}

TrainOptions make_train_options(const RunConfig& cfg) {
  TrainOptions o;
  o.epochs = cfg.epochs;
  o.batch_size = cfg.batch_size;
  o.lr = cfg.lr;
  o.optimizer = cfg.optimizer_kind();
  o.adamw.weight_decay = cfg.weight_decay;
  o.cosine_schedule = cfg.schedule == "cosine";
  o.mode = cfg.exec_mode();
  o.seed = cfg.seed;
  o.warmup_epochs = cfg.resolved_warmup_epochs();
  o.compress_activations = cfg.compress_activations;
  if (!cfg.spill_dir.empty()) o.spill_dir = cfg.spill_dir;
  return o;
}

TrainRecord run_training(const RunConfig& cfg) {
  cfg.validate();
  const Dataset data = make_dataset(cfg);
  Model model = make_model(cfg, data.inputs.cols(), std::max<std::size_t>(data.num_classes, cfg.dims.back()));
  std::optional<QuantPolicy> policy;
  if (!cfg.policy_path.empty()) {
    policy = load_policy(cfg.policy_path);
    model.apply_policy(*policy);
  }
  TrainRecord rec = train(model, data, make_train_options(cfg));
  rec.policy = policy;
  rec.config = config_entries(cfg);
  return rec;
}

}  // namespace hot
