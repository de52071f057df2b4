// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "hot/errors.hpp"

namespace hot {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_num(const std::string& v, const std::string& key) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("bad value '" + v + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean '" + v + "' for " + key);
}

std::vector<std::size_t> parse_dims(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_num<std::size_t>(trim(part), "dims"));
  if (out.size() < 2) throw ConfigError("dims needs at least two widths");
  return out;
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(const std::string&)>;

std::map<std::string, Setter> layer_setters(LayerSettings& s) {
  return {
      {"tile", [&s](const std::string& v) { s.tile = parse_num<std::size_t>(v, "tile"); }},
      {"rank", [&s](const std::string& v) { s.rank = parse_num<std::size_t>(v, "rank"); }},
      {"gx_bits", [&s](const std::string& v) { s.gx_bits = v; }},
      {"gw_bits", [&s](const std::string& v) { s.gw_bits = v; }},
      {"gw_granularity", [&s](const std::string& v) { s.gw_granularity = v; }},
      {"token_axis", [&s](const std::string& v) { s.token_axis = v; }},
      {"gx_mode", [&s](const std::string& v) { s.gx_mode = v; }},
      {"gw_mode", [&s](const std::string& v) { s.gw_mode = v; }},
  };
}

std::map<std::string, Setter> global_setters(RunConfig& c) {
  return {
      {"model", [&c](const std::string& v) { c.model = v; }},
      {"dims", [&c](const std::string& v) { c.dims = parse_dims(v); }},
      {"lora_rank", [&c](const std::string& v) { c.lora_rank = parse_num<std::size_t>(v, "lora_rank"); }},
      {"tokens", [&c](const std::string& v) { c.tokens = parse_num<std::size_t>(v, "tokens"); }},
      {"model_dim", [&c](const std::string& v) { c.model_dim = parse_num<std::size_t>(v, "model_dim"); }},
      {"hidden_dim", [&c](const std::string& v) { c.hidden_dim = parse_num<std::size_t>(v, "hidden_dim"); }},
      {"blocks", [&c](const std::string& v) { c.blocks = parse_num<std::size_t>(v, "blocks"); }},
      {"dataset", [&c](const std::string& v) { c.dataset = v; }},
      {"samples", [&c](const std::string& v) { c.samples = parse_num<std::size_t>(v, "samples"); }},
      {"noise", [&c](const std::string& v) { c.noise = parse_num<double>(v, "noise"); }},
      {"feature_sigma", [&c](const std::string& v) { c.feature_sigma = parse_num<double>(v, "feature_sigma"); }},
      {"idx_images", [&c](const std::string& v) { c.idx_images = v; }},
      {"idx_labels", [&c](const std::string& v) { c.idx_labels = v; }},
      {"seed", [&c](const std::string& v) { c.seed = parse_num<std::uint64_t>(v, "seed"); }},
      {"mode", [&c](const std::string& v) { c.mode = v; }},
      {"epochs", [&c](const std::string& v) { c.epochs = parse_num<std::size_t>(v, "epochs"); }},
      {"batch_size", [&c](const std::string& v) { c.batch_size = parse_num<std::size_t>(v, "batch_size"); }},
      {"lr", [&c](const std::string& v) { c.lr = parse_num<double>(v, "lr"); }},
      {"optimizer", [&c](const std::string& v) { c.optimizer = v; }},
      {"weight_decay", [&c](const std::string& v) { c.weight_decay = parse_num<double>(v, "weight_decay"); }},
      {"schedule", [&c](const std::string& v) { c.schedule = v; }},
      {"warmup_epochs", [&c](const std::string& v) { c.warmup_epochs = parse_num<long>(v, "warmup_epochs"); }},
      {"compress_activations",
       [&c](const std::string& v) { c.compress_activations = parse_bool(v, "compress_activations"); }},
      {"spill_dir", [&c](const std::string& v) { c.spill_dir = v; }},
      {"policy_path", [&c](const std::string& v) { c.policy_path = v; }},
      {"calibration_batches",
       [&c](const std::string& v) { c.calibration_batches = parse_num<std::size_t>(v, "calibration_batches"); }},
      {"lqs_threshold", [&c](const std::string& v) { c.lqs_threshold = parse_num<double>(v, "lqs_threshold"); }},
      {"study_layers", [&c](const std::string& v) { c.study_layers = parse_num<std::size_t>(v, "study_layers"); }},
      {"study_width", [&c](const std::string& v) { c.study_width = parse_num<std::size_t>(v, "study_width"); }},
      {"study_grid", [&c](const std::string& v) { c.study_grid = parse_num<std::size_t>(v, "study_grid"); }},
      {"study_seeds", [&c](const std::string& v) { c.study_seeds = parse_num<std::size_t>(v, "study_seeds"); }},
  };
}

GxMode gx_from_bits(const std::string& bits) {
  if (bits == "4") return GxMode::HqInt4;
  if (bits == "8") return GxMode::HqInt8;
  if (bits == "32" || bits == "fp") return GxMode::Fp;
  if (bits == "inf") return GxMode::HqExact;
  throw ConfigError("gx_bits must be 4, 8, 32 or inf, got '" + bits + "'");
}

GwMode gw_from_bits(const std::string& bits) {
  if (bits == "8") return GwMode::HlaInt8;
  if (bits == "4") return GwMode::HqInt4;
  if (bits == "32" || bits == "fp") return GwMode::Fp;
  if (bits == "inf") return GwMode::HlaFp;
  throw ConfigError("gw_bits must be 4, 8, 32 or inf, got '" + bits + "'");
}

}  // namespace

BackwardConfig LayerSettings::to_backward_config() const {
  BackwardConfig c;
  c.hadamard.tile = tile;
  c.hadamard.rank = rank;
  c.gx_mode = gx_mode.empty() ? gx_from_bits(gx_bits) : parse_gx_mode(gx_mode);
  c.gw_mode = gw_mode.empty() ? gw_from_bits(gw_bits) : parse_gw_mode(gw_mode);
  c.gy_granularity = parse_gy_granularity(gw_granularity);
  if (token_axis == "contracted_l") c.token_axis = TokenAxis::ContractedL;
  else if (token_axis == "output_o") c.token_axis = TokenAxis::OutputO;
  else throw ConfigError("token_axis must be contracted_l or output_o, got '" + token_axis + "'");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

BackwardConfig RunConfig::backward_config_for(const std::string& layer_id) const {
  const auto it = layers.find(layer_id);
  return (it == layers.end() ? defaults : it->second).to_backward_config();
}

std::size_t RunConfig::resolved_warmup_epochs() const {
  if (warmup_epochs >= 0) return static_cast<std::size_t>(warmup_epochs);
  return model == "lora_mlp" ? 0 : epochs / 10;
}

OptimizerKind RunConfig::optimizer_kind() const {
  if (optimizer == "adamw") return OptimizerKind::AdamW;
  if (optimizer == "sgd") return OptimizerKind::Sgd;
  throw ConfigError("optimizer must be adamw or sgd, got '" + optimizer + "'");
}

ExecMode RunConfig::exec_mode() const { return parse_exec_mode(mode); }

void RunConfig::validate() const {
  if (model != "mlp" && model != "lora_mlp" && model != "transformer") throw ConfigError("unknown model '" + model + "'");
  if (dataset != "spirals" && dataset != "tokens" && dataset != "idx") {
    throw ConfigError("unknown dataset '" + dataset + "'");
  }
  if (dataset == "idx" && (idx_images.empty() || idx_labels.empty())) {
    throw ConfigError("dataset=idx needs idx_images and idx_labels");
  }
  if (schedule != "cosine" && schedule != "constant") throw ConfigError("unknown schedule '" + schedule + "'");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (calibration_batches == 0) throw ConfigError("calibration_batches must be positive");
  for (std::size_t d : dims)
    if (d == 0) throw ConfigError("dims must be positive");
  optimizer_kind();
  exec_mode();
  defaults.to_backward_config();
  for (const auto& [id, s] : layers) s.to_backward_config();
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, std::vector<std::pair<std::size_t, std::pair<std::string, std::string>>>> sections;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  auto globals = global_setters(cfg);
  auto defaults = layer_setters(cfg.defaults);
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.rfind("layer.", 0) != 0 || section.size() == 6) {
        throw ConfigError(where + "sections must be named [layer.<id>]");
      }
      sections[section.substr(6)];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) {
      if (!defaults.count(key)) throw ConfigError(where + "unknown per-layer key '" + key + "'");
      sections[section.substr(6)].push_back({line_no, {key, value}});
      continue;
    }
    try {
      if (auto g = globals.find(key); g != globals.end()) {
        g->second(value);
      } else if (auto d = defaults.find(key); d != defaults.end()) {
        d->second(value);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  for (const auto& [id, entries] : sections) {
    LayerSettings s = cfg.defaults;
    auto setters = layer_setters(s);
    for (const auto& [ln, kv] : entries) {
      try {
        setters.at(kv.first)(kv.second);
      } catch (const ConfigError& e) {
        throw ConfigError("config line " + std::to_string(ln) + ": " + e.what());
      }
    }
    cfg.layers.emplace(id, s);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  std::string dims;
  for (std::size_t i = 0; i < c.dims.size(); ++i) dims += (i ? "," : "") + std::to_string(c.dims[i]);
  std::vector<std::pair<std::string, std::string>> out{
      {"model", c.model},
      {"dims", dims},
      {"lora_rank", std::to_string(c.lora_rank)},
      {"tokens", std::to_string(c.tokens)},
      {"model_dim", std::to_string(c.model_dim)},
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"blocks", std::to_string(c.blocks)},
      {"dataset", c.dataset},
      {"samples", std::to_string(c.samples)},
      {"noise", shortest(c.noise)},
      {"feature_sigma", shortest(c.feature_sigma)},
      {"idx_images", c.idx_images},
      {"idx_labels", c.idx_labels},
      {"seed", std::to_string(c.seed)},
      {"mode", c.mode},
      {"epochs", std::to_string(c.epochs)},
      {"batch_size", std::to_string(c.batch_size)},
      {"lr", shortest(c.lr)},
      {"optimizer", c.optimizer},
      {"weight_decay", shortest(c.weight_decay)},
      {"schedule", c.schedule},
      {"warmup_epochs", std::to_string(c.resolved_warmup_epochs())},
      {"compress_activations", c.compress_activations ? "true" : "false"},
      {"spill_dir", c.spill_dir},
      {"policy_path", c.policy_path},
      {"calibration_batches", std::to_string(c.calibration_batches)},
      {"lqs_threshold", shortest(c.lqs_threshold)},
      {"study_layers", std::to_string(c.study_layers)},
      {"study_width", std::to_string(c.study_width)},
      {"study_grid", std::to_string(c.study_grid)},
      {"study_seeds", std::to_string(c.study_seeds)},
      {"tile", std::to_string(c.defaults.tile)},
      {"rank", std::to_string(c.defaults.rank)},
      {"gx_bits", c.defaults.gx_bits},
      {"gw_bits", c.defaults.gw_bits},
      {"gw_granularity", c.defaults.gw_granularity},
      {"token_axis", c.defaults.token_axis},
      {"gx_mode", c.defaults.gx_mode},
      {"gw_mode", c.defaults.gw_mode},
  };
  for (const auto& [id, s] : c.layers) {
    const std::string p = "layer." + id + ".";
    out.push_back({p + "tile", std::to_string(s.tile)});
    out.push_back({p + "rank", std::to_string(s.rank)});
    out.push_back({p + "gx_bits", s.gx_bits});
    out.push_back({p + "gw_bits", s.gw_bits});
    out.push_back({p + "gw_granularity", s.gw_granularity});
    out.push_back({p + "token_axis", s.token_axis});
    out.push_back({p + "gx_mode", s.gx_mode});
    out.push_back({p + "gw_mode", s.gw_mode});
  }
  return out;
}

}  // namespace hot
