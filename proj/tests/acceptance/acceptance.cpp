// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hot/abc.hpp"
#include "hot/backward.hpp"
#include "hot/cost.hpp"
#include "hot/hadamard.hpp"
#include "hot/harness/config.hpp"
#include "hot/harness/study.hpp"
#include "hot/harness/train.hpp"
#include "hot/igemm.hpp"
#include "hot/lqs.hpp"
#include "hot/quantizer.hpp"
#include "hot/rng.hpp"
#include "oracles.hpp"

#ifdef HOT_HAVE_CLI
#include "hot/tools/cli.hpp"
#endif

namespace hot {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome hadamard_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double orth = 0.0;
  double fwht_err = 0.0;
  double inv = 0.0;
  Rng rng(101);
  for (unsigned d = 0; d <= 10; ++d) {
    const std::size_t n = std::size_t{1} << d;
    const Matrix h = build_hadamard(d);
    orth = std::max(orth, max_abs_diff(matmul_nt(h, h), Matrix::identity(n)));
    const auto dense = oracle::hadamard(n);
    for (int t = 0; t < 100; ++t) {
      const Matrix v = random_matrix(rng, n, 1, Normal{});
      const auto ref = oracle::mul(dense, oracle::to_dense(v));
      const auto got = fwht(v.data());
      for (std::size_t i = 0; i < n; ++i) fwht_err = std::max(fwht_err, std::abs(got[i] - ref[i][0]));
    }
  }
  for (std::size_t tile : {2u, 16u, 64u}) {
    const Matrix m = random_matrix(rng, 256, 128, Normal{});
    for (Axis axis : {Axis::Rows, Axis::Cols}) {
      const HadamardConfig cfg{tile, 1};
      inv = std::max(inv, max_abs_diff(block_ht(block_ht(m, axis, cfg), axis, cfg), m));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = orth < 1e-5 && fwht_err < 1e-5 && inv < 1e-5 && secs < 5.0;
  return {ok, "orthogonality " + fmt(orth) + ", fwht " + fmt(fwht_err) + ", involution " + fmt(inv) + ", " +
                  fmt(secs, 3) + " s"};
}

Outcome quantizer_unbiased() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  const Matrix m = random_matrix(rng, 1000, 1000, Uniform{-1.0, 1.0});
  const QuantTensor q = quantize(m, 4, Granularity::PerTensor, Rounding::PseudoStochastic);
  const Matrix back = dequantize(q);
  const double scale = q.params().scales.front();
  double sum = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double e = static_cast<double>(back.data()[i]) - m.data()[i];
    sum += e;
    worst = std::max(worst, std::abs(e));
  }
  const double bias = std::abs(sum / static_cast<double>(m.size()));
  const double secs = seconds_since(t0);
  const bool ok = bias < 0.005 * scale && worst <= scale && secs < 10.0;
  return {ok, "mean error " + fmt(bias / scale) + " scale, max error " + fmt(worst / scale) + " scale, " +
                  fmt(secs, 3) + " s"};
}

QuantTensor random_codes(Rng& rng, std::size_t rows, std::size_t cols, int bits) {
  const int qmax = qmax_for_bits(bits);
  std::vector<std::int8_t> codes(rows * cols);
  for (auto& c : codes) c = static_cast<std::int8_t>(static_cast<int>(rng.below(2 * qmax + 1)) - qmax);
  return QuantTensor::from_codes(rows, cols, codes,
                                 QParams{bits, Granularity::PerTensor, {static_cast<float>(rng.uniform(0.01, 1.0))}});
}

Outcome integer_gemm_exact() {
  Rng rng(303);
  std::size_t mismatches = 0;
  double commute = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int bits = t % 2 == 0 ? 4 : 8;
    const std::size_t m = 1 + rng.below(24);
    const std::size_t k = 1 + rng.below(80);
    const std::size_t n = 1 + rng.below(24);
    const QuantTensor a = random_codes(rng, m, k, bits);
    const QuantTensor b = random_codes(rng, k, n, bits);
    const AccumMatrix acc = gemm_int(a, b);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double ref = 0.0;
        for (std::size_t p = 0; p < k; ++p) ref += static_cast<double>(a.code(i, p)) * b.code(p, j);
        if (static_cast<double>(acc(i, j)) != ref) ++mismatches;
      }
    const Matrix scaled_out = apply_scales(acc, a.params(), b.params());
    commute = std::max(commute, relative_error(scaled_out, matmul(dequantize(a), dequantize(b))));
  }
  return {mismatches == 0 && commute < 1e-4,
          std::to_string(mismatches) + " mismatching entries over 200 cases, dequant commutation " + fmt(commute)};
}

Outcome cancellation() {
  Rng rng(404);
  BackwardConfig cfg = BackwardConfig::hot();
  cfg.gx_mode = GxMode::HqExact;
  cfg.gw_mode = GwMode::HlaFp;
  cfg.hadamard.rank = cfg.hadamard.tile;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t L = 1 + rng.below(80);
    const std::size_t O = 1 + rng.below(80);
    const std::size_t I = 1 + rng.below(80);
    const Matrix gy = random_matrix(rng, L, O, Normal{});
    const Matrix x = random_matrix(rng, L, I, Normal{});
    const Matrix w = random_matrix(rng, O, I, Normal{});
    const GradPair ref = fp_backward(gy, x, w);
    const GradPair got = hot_backward(gy, x, w, cfg);
    worst = std::max({worst, relative_error(got.gx, ref.gx), relative_error(got.gw, ref.gw)});
  }
  return {worst < 1e-4, "max relative error " + fmt(worst)};
}

Outcome projector_equivalence() {
  Rng rng(505);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t rank = 1 + rng.below(16);
    const std::size_t L = 1 + rng.below(64);
    const std::size_t O = 1 + rng.below(64);
    const std::size_t I = 1 + rng.below(32);
    BackwardConfig cfg = BackwardConfig::fp();
    cfg.hadamard.rank = rank;
    const auto keep = lowpass_indices(cfg.hadamard).indices;
    const Matrix gy = random_matrix(rng, L, O, Normal{});
    const Matrix x = random_matrix(rng, L, I, Normal{});
    const Matrix w = random_matrix(rng, O, I, Normal{});
    const auto dgy = oracle::to_dense(gy);
    const auto pl = oracle::projector(L, 16, keep);
    const auto po = oracle::projector(O, 16, keep);

    BackwardConfig gw_cfg = cfg;
    gw_cfg.gw_mode = GwMode::HlaFp;
    worst = std::max(worst, oracle::rel_diff(oracle::mul(oracle::mul(oracle::transpose(dgy), pl), oracle::to_dense(x)),
                                             hot_gw(gy, x, gw_cfg)));
    BackwardConfig ext = cfg;
    ext.gx_mode = GxMode::ExternalHla;
    worst = std::max(worst, oracle::rel_diff(oracle::mul(oracle::mul(pl, dgy), oracle::to_dense(w)), hot_gx(gy, w, ext)));
    BackwardConfig in = cfg;
    in.gx_mode = GxMode::InternalHla;
    worst = std::max(worst, oracle::rel_diff(oracle::mul(oracle::mul(dgy, po), oracle::to_dense(w)), hot_gx(gy, w, in)));
  }
  return {worst < 1e-4, "max relative deviation " + fmt(worst)};
}

Outcome overhead_formulas() {
  const LayerDims d{49, 448, 1792};
  const double vanilla = vanilla_bp_flops(d);
  const double ratio = overhead_flops(d).total() / vanilla;
  const bool ok = std::abs(ratio - 0.07) <= 0.005 && vanilla == 157351936.0;
  return {ok, "overhead/vanilla " + fmt(ratio) + ", vanilla " + fmt(vanilla, 12) + " FLOPs"};
}

Outcome bops_reduction() {
  const CostReport rep = cost_report(vit_b_layer_dims(), PathBits{32, 4, 8});
  const double r = rep.totals.bops_reduction();
  return {r >= 0.60 && r <= 0.70, "ViT-B reduction " + fmt(r)};
}

Outcome activation_compression() {
  Rng rng(808);
  BackwardConfig cfg = BackwardConfig::hot();
  double worst_ratio = 0.0;
  bool identical = true;
  for (int t = 0; t < 20; ++t) {
    const std::size_t L = 16 * (1 + rng.below(16));
    const std::size_t I = 16 * (1 + rng.below(16));
    const Matrix x = random_matrix(rng, L, I, Normal{});
    const Matrix gy = random_matrix(rng, L, 1 + rng.below(64), Normal{});
    const CompressedActivation c = compress_activation(x, "layer", cfg);
    worst_ratio = std::max(worst_ratio, compression_ratio(c));
    identical = identical && gw_from_compressed(gy, c, cfg) == hot_gw(gy, x, cfg);
  }
  return {worst_ratio <= 0.130 && identical,
          "max buffer ratio " + fmt(worst_ratio) + (identical ? ", gradients bit-identical" : ", gradients differ")};
}

Outcome depth_study() {
  const auto t0 = std::chrono::steady_clock::now();
  const DepthStudyResult r = run_depth_study(DepthStudyOptions{});
  const double hla = std::max(r.median_gw_mse_hla_fp, r.median_gw_mse_hla_int8);
  const bool ok = r.median_gx_depth_spearman >= 0.8 && r.median_gw_mse_hq_int4 > hla;
  return {ok, "median Spearman " + fmt(r.median_gx_depth_spearman) + ", g_w MSE HQ-INT4 " +
                  fmt(r.median_gw_mse_hq_int4) + " vs HLA-FP " + fmt(r.median_gw_mse_hla_fp) + " / HLA-INT8 " +
                  fmt(r.median_gw_mse_hla_int8) + ", " + fmt(seconds_since(t0), 3) + " s"};
}

Outcome quantizer_selection() {
  int outlier_token = 0;
  int iid_tensor = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    Matrix spiky = random_matrix(rng, 197, 768, Normal{});
    const std::size_t row = rng.below(197);
    for (std::size_t j = 0; j < spiky.cols(); ++j) spiky(row, j) *= 100.0f;
    if (select_quantizer(quantization_errors(spiky), kDefaultLqsThreshold) == GyGranularity::PerToken) ++outlier_token;
    const Matrix iid = random_matrix(rng, 197, 768, Normal{});
    if (select_quantizer(quantization_errors(iid), kDefaultLqsThreshold) == GyGranularity::PerTensor) ++iid_tensor;
  }
  QuantPolicy p;
  p.seed = 9;
  p.batches = 4;
  p.entries = {{"fc0", GyGranularity::PerToken}, {"fc1", GyGranularity::PerTensor}};
  const std::string text = format_policy(p);
  const bool round_trip = parse_policy(text) == p && format_policy(parse_policy(text)) == text;
  const bool ok = outlier_token == 50 && iid_tensor >= 48 && round_trip;
  return {ok, "outlier per-token " + std::to_string(outlier_token) + "/50, i.i.d. per-tensor " +
                  std::to_string(iid_tensor) + "/50 (197x768), policy round trip " + (round_trip ? "ok" : "broken")};
}

Outcome end_to_end_training() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> fp_acc;
  std::vector<double> hot_acc;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.mode = "fp";
    fp_acc.push_back(run_training(cfg).final_accuracy);
    cfg.mode = "hot";
    hot_acc.push_back(run_training(cfg).final_accuracy);
  }
  const double fp_med = median(fp_acc);
  const double hot_med = median(hot_acc);

  RunConfig lora_cfg;
  lora_cfg.model = "lora_mlp";
  lora_cfg.epochs = 20;
  const Dataset data = make_dataset(lora_cfg);
  Model model = make_model(lora_cfg, data.inputs.cols(), std::max<std::size_t>(data.num_classes, lora_cfg.dims.back()));
  std::vector<Matrix> base;
  for (Linear* l : model.linears()) base.push_back(l->layer().weight);
  train(model, data, make_train_options(lora_cfg));
  bool frozen = true;
  const auto ls = model.linears();
  for (std::size_t i = 0; i < ls.size(); ++i) frozen = frozen && ls[i]->layer().weight == base[i];

  const double secs = seconds_since(t0);
  const bool ok = fp_med >= 0.95 && hot_med >= fp_med - 0.02 && frozen && secs < 120.0;
  return {ok, "median accuracy fp " + fmt(fp_med) + ", hot " + fmt(hot_med) + ", LoRA base " +
                  (frozen ? "bit-identical" : "modified") + ", " + fmt(secs, 3) + " s"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const std::string train_cfg = "dims = 16, 32, 2\nsamples = 256\nepochs = 10\nseed = 7\n";
  const std::string study_cfg = "study_layers = 4\nstudy_width = 64\nstudy_grid = 8\nstudy_seeds = 3\nseed = 7\n";
#ifdef HOT_HAVE_CLI
  namespace fs = std::filesystem;
  const fs::path dir(HOT_TEST_TMPDIR);
  fs::create_directories(dir);
  std::ofstream(dir / "train.ini") << train_cfg;
  std::ofstream(dir / "study.ini") << study_cfg;
  auto invoke = [](std::vector<std::string> args) {
    args.insert(args.begin(), "hot");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  bool ok = true;
  for (const char* cmd : {"train", "analyze"}) {
    const std::string cfg = (dir / (std::string(cmd) == "train" ? "train.ini" : "study.ini")).string();
    const fs::path a = dir / (std::string(cmd) + "_a.json");
    const fs::path b = dir / (std::string(cmd) + "_b.json");
    ok = ok && invoke({cmd, "--config", cfg, "--out", a.string()}) == 0;
    ok = ok && invoke({cmd, "--config", cfg, "--out", b.string()}) == 0;
    ok = ok && slurp(a) == slurp(b) && !slurp(a).empty();
  }
  return {ok, ok ? "train and analyze reports byte-identical across runs" : "reports differ or a run failed"};
#else
  const RunConfig tc = parse_config(train_cfg);
  const bool same_train = train_record_json(run_training(tc)) == train_record_json(run_training(tc));
  DepthStudyOptions so;
  so.layers = 4;
  so.width = 64;
  so.seeds = 3;
  so.base_seed = 7;
  const bool same_study = depth_study_json(run_depth_study(so)) == depth_study_json(run_depth_study(so));
  return {same_train && same_study, "library-level reports compared (CLI not built)"};
#endif
}

}  // namespace
}  // namespace hot

int main() {
  using hot::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Hadamard correctness", hot::hadamard_correctness},
      {"quantizer unbiasedness", hot::quantizer_unbiased},
      {"integer GEMM exactness", hot::integer_gemm_exact},
      {"orthogonality cancellation", hot::cancellation},
      {"low-rank projector equivalence", hot::projector_equivalence},
      {"overhead FLOP formulas", hot::overhead_formulas},
      {"bops reduction", hot::bops_reduction},
      {"activation buffer compression", hot::activation_compression},
      {"layer-wise error study", hot::depth_study},
      {"quantizer selection", hot::quantizer_selection},
      {"end-to-end training", hot::end_to_end_training},
      {"determinism", hot::determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
