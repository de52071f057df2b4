// SPDX-License-Identifier: Apache-2.0
#include "hot/lqs.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hot/errors.hpp"
#include "hot/quantizer.hpp"

namespace hot {
namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw ConfigError("policy line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const char* key) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) parse_fail(line, std::string("bad value for ") + key);
  return v;
}

}  // namespace

std::optional<GyGranularity> QuantPolicy::find(const std::string& layer_id) const {
  for (const auto& e : entries)
    if (e.layer_id == layer_id) return e.granularity;
  return std::nullopt;
}

double mse(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("mse: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
  if (a.empty()) return 0.0;
  double s = 0.0;
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double d = static_cast<double>(ad[i]) - bd[i];
    s += d * d;
  }
  return s / static_cast<double>(ad.size());
}

QuantErrors quantization_errors(const Matrix& gy) {
  const auto err = [&](Granularity g) {
    return mse(gy, dequantize(quantize(gy, 8, g, Rounding::PseudoStochastic)));
  };
  return {err(Granularity::PerTensor), err(Granularity::PerRow)};
}

GyGranularity select_quantizer(const QuantErrors& e, double threshold) {
  if (!(e.per_tensor > 0.0)) return GyGranularity::PerTensor;
  const double gain = (e.per_tensor - e.per_token) / e.per_tensor;
  return gain >= threshold ? GyGranularity::PerToken : GyGranularity::PerTensor;
}

CalibrationResult calibrate_from_gradients(const std::vector<LayerGradientSamples>& samples, double threshold,
                                           std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("calibrate: no layers to calibrate");
  CalibrationResult out;
  out.policy.seed = seed;
  out.policy.threshold = threshold;
  out.policy.batches = samples.front().gy.size();
  for (const auto& layer : samples) {
    if (layer.gy.empty()) throw std::invalid_argument("calibrate: layer '" + layer.layer_id + "' has no captured g_y");
    QuantErrors mean;
    for (const Matrix& gy : layer.gy) {
      const QuantErrors e = quantization_errors(gy);
      mean.per_tensor += e.per_tensor;
      mean.per_token += e.per_token;
    }
    mean.per_tensor /= static_cast<double>(layer.gy.size());
    mean.per_token /= static_cast<double>(layer.gy.size());
    LayerCalibration lc{layer.layer_id, mean, 0.0, select_quantizer(mean, threshold)};
    if (mean.per_tensor > 0.0) lc.relative_gain = (mean.per_tensor - mean.per_token) / mean.per_tensor;
    out.policy.entries.push_back({layer.layer_id, lc.choice});
    out.layers.push_back(std::move(lc));
  }
  return out;
}

std::string format_policy(const QuantPolicy& policy) {
  std::ostringstream os;
  os << "# seed=" << policy.seed << '\n';
  os << "# threshold=" << shortest(policy.threshold) << '\n';
  os << "# batches=" << policy.batches << '\n';
  for (const auto& e : policy.entries) os << e.layer_id << '=' << to_string(e.granularity) << '\n';
  return os.str();
}

QuantPolicy parse_policy(const std::string& text) {
  QuantPolicy p;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty()) continue;
    const bool comment = line.front() == '#';
    if (comment) line = trim(line.substr(1));
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (comment) continue;
      parse_fail(line_no, "expected layer_id=per_token|per_tensor");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (comment) {
      if (key == "seed") p.seed = parse_number<std::uint64_t>(value, line_no, "seed");
      else if (key == "threshold") p.threshold = parse_number<double>(value, line_no, "threshold");
      else if (key == "batches") p.batches = parse_number<std::size_t>(value, line_no, "batches");
      continue;
    }
    if (key.empty()) parse_fail(line_no, "empty layer id");
    GyGranularity g;
    if (value == "per_token") g = GyGranularity::PerToken;
    else if (value == "per_tensor") g = GyGranularity::PerTensor;
    else parse_fail(line_no, "unknown granularity '" + value + "'");
    if (!seen.insert(key).second) parse_fail(line_no, "duplicate layer id '" + key + "'");
    p.entries.push_back({key, g});
  }
  if (p.entries.empty()) throw ConfigError("policy: no entries");
  return p;
}

void save_policy(const QuantPolicy& policy, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << format_policy(policy);
}

QuantPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open policy " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_policy(ss.str());
}

void check_policy_covers(const QuantPolicy& policy, const std::vector<std::string>& layer_ids) {
  const std::set<std::string> known(layer_ids.begin(), layer_ids.end());
  for (const auto& e : policy.entries) {
    if (!known.count(e.layer_id)) throw ConfigError("policy names unknown layer '" + e.layer_id + "'");
  }
  for (const auto& id : layer_ids) {
    if (!policy.find(id)) throw ConfigError("policy has no entry for layer '" + id + "'");
  }
}

}  // namespace hot
