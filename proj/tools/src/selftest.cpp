// SPDX-License-Identifier: Apache-2.0
#include "hot/tools/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "hot/backward.hpp"
#include "hot/cost.hpp"
#include "hot/hadamard.hpp"
#include "hot/igemm.hpp"
#include "hot/lqs.hpp"
#include "hot/quantizer.hpp"
#include "hot/rng.hpp"

namespace hot::cli {
namespace {

using Check = std::function<std::string()>;  // empty string on success

std::string fail(const std::string& what, double got, double limit) {
  std::ostringstream os;
  os << what << " " << got << " exceeds " << limit;
  return os.str();
}

std::string hadamard_orthogonality() {
  for (unsigned d = 0; d <= 10; ++d) {
    const Matrix h = build_hadamard(d);
    const double err = max_abs_diff(matmul_nt(h, h), Matrix::identity(h.rows()));
    if (err >= 1e-5) return fail("order " + std::to_string(d) + " deviation", err, 1e-5);
  }
  return {};
}

std::string fwht_matches_dense() {
  Rng rng(11);
  for (unsigned d = 1; d <= 10; ++d) {
    const Matrix h = build_hadamard(d);
    for (int t = 0; t < 5; ++t) {
      const Matrix v = random_matrix(rng, h.rows(), 1, Normal{});
      const Matrix dense = matmul(h, v);
      const std::vector<float> fast = fwht(v.data());
      for (std::size_t i = 0; i < fast.size(); ++i) {
        const double err = std::abs(static_cast<double>(fast[i]) - dense.data()[i]);
        if (err >= 1e-5) return fail("order " + std::to_string(d) + " deviation", err, 1e-5);
      }
    }
  }
  return {};
}

std::string block_ht_involution() {
  Rng rng(12);
  const Matrix m = random_matrix(rng, 48, 32, Normal{});
  const HadamardConfig cfg;
  for (Axis axis : {Axis::Rows, Axis::Cols}) {
    const double err = max_abs_diff(block_ht(block_ht(m, axis, cfg), axis, cfg), m);
    if (err >= 1e-5) return fail("round-trip deviation", err, 1e-5);
  }
  return {};
}

std::string quantizer_unbiased() {
  Rng rng(13);
  const Matrix m = random_matrix(rng, 200, 1000, Uniform{-1.0, 1.0});
  const QuantTensor q = quantize(m, 4, Granularity::PerTensor, Rounding::PseudoStochastic);
  const Matrix back = dequantize(q);
  const double scale = q.params().scales.front();
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double e = static_cast<double>(back.data()[i]) - m.data()[i];
    if (std::abs(e) > scale) return fail("element error", std::abs(e), scale);
    sum += e;
  }
  const double bias = std::abs(sum / static_cast<double>(m.size()));
  if (bias >= 0.005 * scale) return fail("mean error", bias, 0.005 * scale);
  return {};
}

QuantTensor random_codes(Rng& rng, std::size_t rows, std::size_t cols, int bits) {
  const int qmax = qmax_for_bits(bits);
  std::vector<std::int8_t> codes(rows * cols);
  for (auto& c : codes) c = static_cast<std::int8_t>(static_cast<int>(rng.below(2 * qmax + 1)) - qmax);
  return QuantTensor::from_codes(rows, cols, codes, QParams{bits, Granularity::PerTensor, {1.0f}});
}

std::string igemm_oracle() {
  Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    const int bits = t % 2 == 0 ? 4 : 8;
    const std::size_t m = 1 + rng.below(20);
    const std::size_t k = 1 + rng.below(40);
    const std::size_t n = 1 + rng.below(20);
    const QuantTensor a = random_codes(rng, m, k, bits);
    const QuantTensor b = random_codes(rng, k, n, bits);
    const AccumMatrix acc = gemm_int(a, b);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double ref = 0.0;
        for (std::size_t p = 0; p < k; ++p) ref += static_cast<double>(a.code(i, p)) * b.code(p, j);
        if (static_cast<double>(acc(i, j)) != ref) return "mismatch at case " + std::to_string(t);
      }
    }
  }
  return {};
}

std::string nibble_round_trip() {
  Rng rng(15);
  for (std::size_t count : {0u, 1u, 7u, 64u, 129u}) {
    std::vector<std::int8_t> codes(count);
    for (auto& c : codes) c = static_cast<std::int8_t>(static_cast<int>(rng.below(15)) - 7);
    if (unpack_nibbles(pack_nibbles(codes), count) != codes) return "count " + std::to_string(count);
  }
  return {};
}

std::string quant_record_round_trip() {
  Rng rng(16);
  for (int bits : {4, 8}) {
    const Matrix m = random_matrix(rng, 9, 13, Normal{});
    const QuantTensor q = quantize(m, bits, Granularity::PerRow, Rounding::Nearest);
    std::stringstream ss;
    write_quant_tensor(ss, q);
    if (!(read_quant_tensor(ss) == q)) return "bits " + std::to_string(bits);
  }
  return {};
}

std::string exact_backward_matches_fp() {
  Rng rng(17);
  BackwardConfig cfg = BackwardConfig::fp();
  cfg.gx_mode = GxMode::HqExact;
  cfg.gw_mode = GwMode::HlaFp;
  cfg.hadamard.rank = cfg.hadamard.tile;
  for (int t = 0; t < 5; ++t) {
    const Matrix gy = random_matrix(rng, 32, 48, Normal{});
    const Matrix x = random_matrix(rng, 32, 16, Normal{});
    const Matrix w = random_matrix(rng, 48, 16, Normal{});
    const GradPair ref = fp_backward(gy, x, w);
    const GradPair got = hot_backward(gy, x, w, cfg);
    const double ex = relative_error(got.gx, ref.gx);
    const double ew = relative_error(got.gw, ref.gw);
    if (ex >= 1e-4) return fail("g_x relative error", ex, 1e-4);
    if (ew >= 1e-4) return fail("g_w relative error", ew, 1e-4);
  }
  return {};
}

std::string policy_round_trip() {
  QuantPolicy p;
  p.entries = {{"fc0", GyGranularity::PerTensor}, {"fc1", GyGranularity::PerToken}};
  p.seed = 7;
  p.batches = 4;
  p.threshold = 0.5;
  const std::string text = format_policy(p);
  if (!(parse_policy(text) == p) || format_policy(parse_policy(text)) != text) return "policy differs after round trip";
  return {};
}

std::string overhead_reference() {
  const LayerDims d{49, 448, 1792, 16, 8};
  const double ratio = overhead_flops(d).total() / vanilla_bp_flops(d);
  if (std::abs(ratio - 0.070) > 0.005) return fail("overhead ratio distance from 0.070", std::abs(ratio - 0.070), 0.005);
  return {};
}

}  // namespace

std::vector<CheckResult> run_selftests() {
  const std::vector<std::pair<std::string, Check>> checks{
      {"hadamard_orthogonality", hadamard_orthogonality},
      {"fwht_matches_dense", fwht_matches_dense},
      {"block_ht_involution", block_ht_involution},
      {"quantizer_unbiased", quantizer_unbiased},
      {"igemm_oracle", igemm_oracle},
      {"nibble_round_trip", nibble_round_trip},
      {"quant_record_round_trip", quant_record_round_trip},
      {"exact_backward_matches_fp", exact_backward_matches_fp},
      {"policy_round_trip", policy_round_trip},
      {"overhead_reference", overhead_reference},
  };
  std::vector<CheckResult> out;
  for (const auto& [name, check] : checks) {
    CheckResult r{name, false, {}};
    try {
      r.detail = check();
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::size_t report_selftests(const std::vector<CheckResult>& results, std::ostream& os) {
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (r.passed) {
      os << "PASS " << r.name << "\n";
    } else {
      ++failed;
      os << "FAIL " << r.name << ": " << r.detail << "\n";
    }
  }
  os << "selftest: " << results.size() - failed << " passed, " << failed << " failed\n";
  return failed;
}

}  // namespace hot::cli
