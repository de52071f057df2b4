// SPDX-License-Identifier: Apache-2.0
#include "hot/tools/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "hot/cost.hpp"
#include "hot/errors.hpp"
#include "hot/harness/calibrate.hpp"
#include "hot/harness/config.hpp"
#include "hot/harness/study.hpp"
#include "hot/harness/train.hpp"
#include "hot/lqs.hpp"
#include "hot/tools/selftest.hpp"

namespace hot::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string dims;
  std::optional<std::size_t> tile;
  std::optional<std::size_t> rank;
  std::string mode;
  std::string policy;
  std::string spill_dir;
  int gx_bits = 4;
  int gw_bits = 8;
};

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw OutputError("cannot open " + path + " for writing");
  os << content;
  if (!os) throw OutputError("failed writing " + path);
}

/// Report to --out, or to `out` when no path was given.
void emit(const Options& o, const std::string& content, std::ostream& out) {
  if (o.out.empty()) {
    out << content;
  } else {
    write_file(o.out, content);
  }
}

/// Wall-clock data lives beside the report so the report itself stays reproducible.
void emit_meta(const Options& o, const std::string& command, double seconds) {
  if (o.out.empty()) return;
  nlohmann::ordered_json j;
  j["command"] = command;
  j["report"] = o.out;
  j["wall_clock_seconds"] = seconds;
  write_file(o.out + ".meta.json", j.dump(2) + "\n");
}

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.mode.empty()) cfg.mode = o.mode;
  if (!o.policy.empty()) cfg.policy_path = o.policy;
  if (!o.spill_dir.empty()) cfg.spill_dir = o.spill_dir;
  if (o.tile) {
    cfg.defaults.tile = *o.tile;
    for (auto& [id, s] : cfg.layers) s.tile = *o.tile;
  }
  if (o.rank) {
    cfg.defaults.rank = *o.rank;
    for (auto& [id, s] : cfg.layers) s.rank = *o.rank;
  }
  cfg.validate();
  return cfg;
}

std::size_t parse_dim(const std::string& s) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
    throw UsageError("--dims: '" + s + "' is not a non-negative integer");
  }
  return v;
}

std::vector<NamedDims> parse_dims_list(const std::string& text, std::size_t tile, std::size_t rank) {
  std::vector<NamedDims> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    std::vector<std::size_t> v;
    std::stringstream parts(group);
    std::string part;
    while (std::getline(parts, part, ',')) v.push_back(parse_dim(part));
    if (v.size() != 3) throw UsageError("--dims: expected L,O,I triples, got '" + group + "'");
    out.push_back({"dims" + std::to_string(out.size()), LayerDims{v[0], v[1], v[2], tile, rank}});
  }
  if (out.empty()) throw UsageError("--dims: no triples given");
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_selftest(std::ostream& out) {
  return report_selftests(run_selftests(), out) == 0 ? kOk : kFailure;
}

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const TrainRecord rec = run_training(cfg);
  emit(o, train_record_json(rec), out);
  emit_meta(o, "train", rec.wall_clock_seconds);
  if (!o.out.empty()) out << "final_accuracy " << rec.final_accuracy << "\n";
  return kOk;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const Dataset data = make_dataset(cfg);
  Model model = make_model(cfg, data.inputs.cols(), std::max<std::size_t>(data.num_classes, cfg.dims.back()));
  const CalibrationResult res =
      calibrate(model, data, cfg.calibration_batches, cfg.batch_size, cfg.lqs_threshold, cfg.seed);
  emit(o, format_policy(res.policy), out);
  if (!o.out.empty()) {
    out << std::left << std::setw(12) << "layer" << std::right << std::setw(14) << "per_tensor" << std::setw(14)
        << "per_token" << std::setw(10) << "gain" << "  choice\n";
    for (const auto& l : res.layers) {
      out << std::left << std::setw(12) << l.layer_id << std::right << std::scientific << std::setprecision(3)
          << std::setw(14) << l.mean_errors.per_tensor << std::setw(14) << l.mean_errors.per_token << std::fixed
          << std::setw(10) << l.relative_gain << "  " << to_string(l.choice) << "\n";
    }
  }
  return kOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const auto t0 = std::chrono::steady_clock::now();
  DepthStudyOptions so;
  so.layers = cfg.study_layers;
  so.width = cfg.study_width;
  so.grid = cfg.study_grid;
  so.seeds = cfg.study_seeds;
  so.base_seed = cfg.seed;
  so.hadamard.tile = cfg.defaults.tile;
  so.hadamard.rank = cfg.defaults.rank;
  const DepthStudyResult res = run_depth_study(so);
  const std::string text = depth_study_text(res);
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, depth_study_json(res));
    write_file(o.out + ".txt", text);
    out << text;
  }
  emit_meta(o, "analyze", seconds_since(t0));
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const std::size_t tile = o.tile.value_or(16);
  const std::size_t rank = o.rank.value_or(8);
  const std::vector<NamedDims> dims = o.dims.empty() ? reference_layer_dims(tile, rank)
                                                     : parse_dims_list(o.dims, tile, rank);
  for (const auto& d : dims) {
    try {
      d.dims.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const CostReport rep = cost_report(dims, PathBits{32, o.gx_bits, o.gw_bits});
  emit(o, cost_report_json(rep), out);
  if (!o.out.empty()) {
    out << std::fixed << std::setprecision(4) << "overhead_ratio " << rep.totals.overhead_ratio()
        << "\nbops_reduction " << rep.totals.bops_reduction() << "\nmemory_ratio " << rep.totals.memory_ratio()
        << "\n";
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hadamard-domain low-precision backpropagation toolkit"};
  app.name("hot");
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Config file (key = value)");
    sub->add_option("--out", o.out, "Report path");
    sub->add_option("--seed", o.seed, "Seed override");
  };
  auto add_hadamard = [&](CLI::App* sub) {
    sub->add_option("--tile", o.tile, "Hadamard tile size")->check(CLI::PositiveNumber);
    sub->add_option("--rank", o.rank, "Kept coefficients per tile")->check(CLI::NonNegativeNumber);
  };

  CLI::App* selftest = app.add_subcommand("selftest", "Run the invariant suite");
  CLI::App* train = app.add_subcommand("train", "Train a model and write its record");
  add_common(train);
  add_hadamard(train);
  train->add_option("--mode", o.mode, "fp | hot")->check(CLI::IsMember({"fp", "hot", "fp_oracle"}));
  train->add_option("--policy", o.policy, "Quantizer policy file");
  train->add_option("--spill-dir", o.spill_dir, "Directory for spilled activation buffers");
  CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "Select per-layer g_y quantizers and write a policy");
  add_common(calibrate_cmd);
  add_hadamard(calibrate_cmd);
  CLI::App* analyze = app.add_subcommand("analyze", "Layer-wise gradient error study");
  add_common(analyze);
  add_hadamard(analyze);
  CLI::App* bench = app.add_subcommand("bench", "Evaluate the cost model for layer shapes");
  bench->add_option("--out", o.out, "Report path");
  bench->add_option("--dims", o.dims, "L,O,I[;L,O,I...]");
  add_hadamard(bench);
  bench->add_option("--gx-bits", o.gx_bits, "Bits of the g_x GEMM")->check(CLI::IsMember({4, 8, 32}));
  bench->add_option("--gw-bits", o.gw_bits, "Bits of the g_w GEMM")->check(CLI::IsMember({4, 8, 32}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "hot: usage: " << one_line(e.what()) << "\n";
    return kUsage;
  }

  try {
    if (selftest->parsed()) return cmd_selftest(out);
    if (train->parsed()) return cmd_train(o, out);
    if (calibrate_cmd->parsed()) return cmd_calibrate(o, out);
    if (analyze->parsed()) return cmd_analyze(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
  } catch (const UsageError& e) {
    err << "hot: usage: " << one_line(e.what()) << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "hot: config: " << one_line(e.what()) << "\n";
    return kConfig;
  } catch (const DataError& e) {
    err << "hot: data: " << one_line(e.what()) << "\n";
    return kData;
  } catch (const TrainingError& e) {
    err << "hot: training: " << one_line(e.what()) << "\n";
    return kFailure;
  } catch (const OutputError& e) {
    err << "hot: output: " << one_line(e.what()) << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "hot: error: " << one_line(e.what()) << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace hot::cli
