// SPDX-License-Identifier: Apache-2.0
#include "hot/harness/optim.hpp"

#include <cmath>
#include <numbers>

#include "hot/errors.hpp"

namespace hot {
namespace {

void check(const Matrix& p, const Matrix& g, const char* op) {
  if (p.rows() != g.rows() || p.cols() != g.cols()) {
    throw DimensionError(std::string(op) + ": parameter " + p.shape_string() + " vs gradient " + g.shape_string());
  }
  if (!all_finite(g)) throw TrainingError(std::string(op) + ": non-finite gradient");
}

}  // namespace

void sgd_step(Matrix& p, const Matrix& g, double lr) {
  check(p, g, "sgd_step");
  auto pd = p.data();
  const auto gd = g.data();
  for (std::size_t i = 0; i < pd.size(); ++i) pd[i] = static_cast<float>(pd[i] - lr * gd[i]);
}

void adamw_step(Matrix& p, const Matrix& g, AdamState& s, double lr, const AdamWHyper& h) {
  check(p, g, "adamw_step");
  if (s.m.rows() != p.rows() || s.m.cols() != p.cols()) {
    s.m = Matrix(p.rows(), p.cols());
    s.v = Matrix(p.rows(), p.cols());
    s.step = 0;
  }
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  auto pd = p.data();
  auto md = s.m.data();
  auto vd = s.v.data();
  const auto gd = g.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double gi = gd[i];
    double pi = pd[i];
    pi -= lr * h.weight_decay * pi;
    const double mi = h.beta1 * md[i] + (1.0 - h.beta1) * gi;
    const double vi = h.beta2 * vd[i] + (1.0 - h.beta2) * gi * gi;
    md[i] = static_cast<float>(mi);
    vd[i] = static_cast<float>(vi);
    pi -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + h.eps);
    pd[i] = static_cast<float>(pi);
  }
}

double cosine_lr(double base, std::size_t step, std::size_t total, double floor) {
  if (total == 0 || step >= total) return floor;
  const double frac = static_cast<double>(step) / static_cast<double>(total);
  return floor + 0.5 * (base - floor) * (1.0 + std::cos(std::numbers::pi * frac));
}

void Optimizer::step(const std::vector<ParamRef>& params, double lr) {
  if (kind_ == OptimizerKind::Sgd) {
    for (const auto& p : params) sgd_step(*p.value, *p.grad, lr);
    return;
  }
  if (states_.size() != params.size()) states_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    try {
      adamw_step(*params[i].value, *params[i].grad, states_[i], lr, hyper_);
    } catch (const TrainingError& e) {
      throw TrainingError(params[i].name + ": " + e.what());
    }
  }
}

}  // namespace hot
