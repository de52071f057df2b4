// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/study.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hot/errors.hpp"
#include "hot/lqs.hpp"
#include "hot/rng.hpp"
#include "json_util.hpp"

namespace hot {
namespace {

struct ChainStep {
  Linear* linear = nullptr;
  Matrix input;        // input of a linear layer
  Matrix relu_input;   // pre-activation of a ReLU
};

double squared_ratio(const Matrix& approx, const Matrix& ref) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = static_cast<double>(approx.data()[i]) - ref.data()[i];
    num += d * d;
    den += static_cast<double>(ref.data()[i]) * ref.data()[i];
  }
  return den == 0.0 ? 0.0 : num / den;
}

void relu_mask(Matrix& g, const Matrix& pre) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(pre.data()[i] > 0.0f)) g.data()[i] = 0.0f;
  }
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

const SchemeErrors& find_scheme(const std::vector<SchemeErrors>& all, const std::string& name) {
  for (const auto& s : all) {
    if (s.scheme == name) return s;
  }
  throw std::logic_error("depth study: missing scheme " + name);
}

double median_gw(const SchemeErrors& s) {
  std::vector<double> v;
  for (const auto& l : s.layers) v.push_back(l.gw_mse);
  return median(v);
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) return 0.0;
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double mean = 0.5 * static_cast<double>(a.size() + 1);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<SchemeErrors> layerwise_error_study(Model& model, const Matrix& x, const Matrix& gy_out,
                                                const std::vector<StudyScheme>& schemes) {
  std::vector<ChainStep> chain;
  std::size_t n_linear = 0;
  Matrix h = x;
  for (std::size_t i = 0; i < model.size(); ++i) {
    Module& m = model.module(i);
    if (auto* lin = dynamic_cast<Linear*>(&m)) {
      if (lin->layer().lora) throw std::invalid_argument("layerwise_error_study: LoRA layers are not supported");
      ChainStep s;
      s.linear = lin;
      s.input = h;
      h = matmul_nt(h, lin->layer().weight);
      chain.push_back(std::move(s));
      ++n_linear;
    } else if (dynamic_cast<Relu*>(&m) != nullptr) {
      ChainStep s;
      s.relu_input = h;
      for (float& v : h.data()) v = v > 0.0f ? v : 0.0f;
      chain.push_back(std::move(s));
    } else {
      throw std::invalid_argument("layerwise_error_study: unsupported module '" + m.name() + "'");
    }
  }
  if (n_linear < 2) throw std::invalid_argument("layerwise_error_study: needs at least 2 linear layers");
  if (gy_out.rows() != h.rows() || gy_out.cols() != h.cols()) {
    throw DimensionError("layerwise_error_study: upstream gradient " + gy_out.shape_string() + " vs output " +
                         h.shape_string());
  }

  std::vector<SchemeErrors> out;
  for (const StudyScheme& scheme : schemes) {
    SchemeErrors se;
    se.scheme = scheme.name;
    Matrix g_ref = gy_out;
    Matrix g_app = gy_out;
    std::size_t depth = 0;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      if (it->linear == nullptr) {
        relu_mask(g_ref, it->relu_input);
        relu_mask(g_app, it->relu_input);
        continue;
      }
      const Matrix& w = it->linear->layer().weight;
      GradPair ref = fp_backward(g_ref, it->input, w);
      GradPair app = analysis_backward(g_app, it->input, w, scheme.config);
      LayerError e;
      e.layer_id = it->linear->layer().id;
      e.depth_from_output = depth++;
      e.gx_mse = mse(app.gx, ref.gx);
      e.gw_mse = mse(app.gw, ref.gw);
      e.gx_relative = squared_ratio(app.gx, ref.gx);
      e.gw_relative = squared_ratio(app.gw, ref.gw);
      se.layers.push_back(std::move(e));
      g_ref = std::move(ref.gx);
      g_app = std::move(app.gx);
    }
    std::reverse(se.layers.begin(), se.layers.end());
    out.push_back(std::move(se));
  }
  return out;
}

Matrix make_smooth_tokens(std::size_t grid, std::size_t dim, std::uint64_t seed) {
  if (grid == 0 || grid % 4 != 0) throw std::invalid_argument("make_smooth_tokens: grid must be a positive multiple of 4");
  constexpr std::size_t kWaves = 3;
  constexpr double kNoise = 0.05;
  Rng rng(seed);
  struct Wave {
    double fu, fv, phase, amp;
  };
  std::vector<Wave> waves(dim * kWaves);
  for (auto& w : waves) {
    w.fu = static_cast<double>(rng.below(3));
    w.fv = static_cast<double>(rng.below(3));
    w.phase = 2.0 * std::numbers::pi * rng.uniform();
    w.amp = rng.normal();
  }
  const std::size_t patches = grid / 4;
  Matrix x(grid * grid, dim);
  std::size_t row = 0;
  for (std::size_t pu = 0; pu < patches; ++pu) {
    for (std::size_t pv = 0; pv < patches; ++pv) {
      for (std::size_t iu = 0; iu < 4; ++iu) {
        for (std::size_t iv = 0; iv < 4; ++iv, ++row) {
          const double u = static_cast<double>(pu * 4 + iu) / static_cast<double>(grid);
          const double v = static_cast<double>(pv * 4 + iv) / static_cast<double>(grid);
          for (std::size_t c = 0; c < dim; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < kWaves; ++k) {
              const Wave& w = waves[c * kWaves + k];
              s += w.amp * std::cos(std::numbers::pi * (w.fu * u + w.fv * v) + w.phase);
            }
            x(row, c) = static_cast<float>(s + kNoise * rng.normal());
          }
        }
      }
    }
  }
  return x;
}

std::vector<StudyScheme> depth_study_schemes(const HadamardConfig& hadamard) {
  auto make = [&](GxMode gx, GwMode gw) {
    BackwardConfig c = BackwardConfig::fp();
    c.hadamard = hadamard;
    c.gx_mode = gx;
    c.gw_mode = gw;
    return c;
  };
  return {{"internal_hla_gx", make(GxMode::InternalHla, GwMode::Fp)},
          {"hq_int4_gw", make(GxMode::Fp, GwMode::HqInt4)},
          {"hla_fp_gw", make(GxMode::Fp, GwMode::HlaFp)},
          {"hla_int8_gw", make(GxMode::Fp, GwMode::HlaInt8)}};
}

DepthStudyResult run_depth_study(const DepthStudyOptions& opts) {
  if (opts.layers < 2) throw std::invalid_argument("depth study: needs at least 2 layers");
  if (opts.seeds == 0) throw std::invalid_argument("depth study: needs at least one seed");
  DepthStudyResult res;
  res.options = opts;
  const std::vector<StudyScheme> schemes = depth_study_schemes(opts.hadamard);
  const std::vector<std::size_t> dims(opts.layers + 1, opts.width);
  std::vector<double> rho;
  std::vector<double> hq;
  std::vector<double> hla_fp;
  std::vector<double> hla_int8;
  for (std::size_t s = 0; s < opts.seeds; ++s) {
    const std::uint64_t seed = opts.base_seed + s;
    const Rng root(seed);
    Rng init = root.split(1);
    Model model = build_mlp(dims, init, BackwardConfig::fp());
    const Matrix x = make_smooth_tokens(opts.grid, opts.width, root.split(2).next_u64());
    Rng grad_rng = root.split(3);
    const Matrix gy = random_matrix(grad_rng, x.rows(), opts.width, Normal{0.0f, 1.0f});

    SeedOutcome so;
    so.seed = seed;
    so.schemes = layerwise_error_study(model, x, gy, schemes);
    const SchemeErrors& gx = find_scheme(so.schemes, "internal_hla_gx");
    std::vector<double> mses;
    std::vector<double> depths;
    for (const auto& l : gx.layers) {
      mses.push_back(l.gx_mse);
      depths.push_back(static_cast<double>(l.depth_from_output));
    }
    so.gx_depth_spearman = spearman(mses, depths);
    rho.push_back(so.gx_depth_spearman);
    hq.push_back(median_gw(find_scheme(so.schemes, "hq_int4_gw")));
    hla_fp.push_back(median_gw(find_scheme(so.schemes, "hla_fp_gw")));
    hla_int8.push_back(median_gw(find_scheme(so.schemes, "hla_int8_gw")));
    res.seeds.push_back(std::move(so));
  }
  res.median_gx_depth_spearman = median(rho);
  res.median_gw_mse_hq_int4 = median(hq);
  res.median_gw_mse_hla_fp = median(hla_fp);
  res.median_gw_mse_hla_int8 = median(hla_int8);
  return res;
}

std::string depth_study_json(const DepthStudyResult& r) {
  using detail::Json;
  Json j;
  const DepthStudyOptions& o = r.options;
  j["config"] = Json{{"layers", o.layers},       {"width", o.width},         {"grid", o.grid},
                     {"seeds", o.seeds},         {"base_seed", o.base_seed}, {"tile", o.hadamard.tile},
                     {"rank", o.hadamard.rank}};
  Json summary;
  summary["median_gx_depth_spearman"] = r.median_gx_depth_spearman;
  summary["median_gw_mse_hq_int4"] = r.median_gw_mse_hq_int4;
  summary["median_gw_mse_hla_fp"] = r.median_gw_mse_hla_fp;
  summary["median_gw_mse_hla_int8"] = r.median_gw_mse_hla_int8;
  j["summary"] = std::move(summary);
  Json seeds = Json::array();
  for (const auto& s : r.seeds) {
    Json js;
    js["seed"] = s.seed;
    js["gx_depth_spearman"] = s.gx_depth_spearman;
    Json schemes = Json::array();
    for (const auto& se : s.schemes) {
      Json layers = Json::array();
      for (const auto& l : se.layers) {
        layers.push_back(Json{{"id", l.layer_id},
                              {"depth_from_output", l.depth_from_output},
                              {"gx_mse", l.gx_mse},
                              {"gw_mse", l.gw_mse},
                              {"gx_relative", l.gx_relative},
                              {"gw_relative", l.gw_relative}});
      }
      schemes.push_back(Json{{"scheme", se.scheme}, {"layers", std::move(layers)}});
    }
    js["schemes"] = std::move(schemes);
    seeds.push_back(std::move(js));
  }
  j["seeds"] = std::move(seeds);
  return j.dump(2) + "\n";
}

std::string depth_study_text(const DepthStudyResult& r) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(4);
  if (r.seeds.empty()) return {};
  const auto& first = r.seeds.front().schemes;
  for (std::size_t si = 0; si < first.size(); ++si) {
    os << "scheme " << first[si].scheme << " (median over " << r.seeds.size() << " seeds)\n";
    os << std::left << std::setw(8) << "layer" << std::right << std::setw(7) << "depth" << std::setw(14) << "gx_mse"
       << std::setw(14) << "gw_mse" << "\n";
    for (std::size_t li = 0; li < first[si].layers.size(); ++li) {
      std::vector<double> gx;
      std::vector<double> gw;
      for (const auto& s : r.seeds) {
        gx.push_back(s.schemes[si].layers[li].gx_mse);
        gw.push_back(s.schemes[si].layers[li].gw_mse);
      }
      const LayerError& l = first[si].layers[li];
      os << std::left << std::setw(8) << l.layer_id << std::right << std::setw(7) << l.depth_from_output
         << std::setw(14) << median(gx) << std::setw(14) << median(gw) << "\n";
    }
    os << "\n";
  }
  os << std::fixed << std::setprecision(4);
  os << "median gx depth spearman  " << r.median_gx_depth_spearman << "\n";
  os << std::scientific;
  os << "median gw mse hq_int4     " << r.median_gw_mse_hq_int4 << "\n";
  os << "median gw mse hla_fp      " << r.median_gw_mse_hla_fp << "\n";
  os << "median gw mse hla_int8    " << r.median_gw_mse_hla_int8 << "\n";
  return os.str();
}

}  // namespace hot
