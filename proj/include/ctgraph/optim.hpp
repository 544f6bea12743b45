#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "ctgraph/error.hpp"
#include "ctgraph/model.hpp"

namespace ctgraph {

struct TrainConfig {
  std::size_t batch_size = 4;
  double max_lr = 1e-4;
  std::size_t warmup_steps = 20000;
  std::size_t total_steps = 200000;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t log_every = 50;

  void validate() const {
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    require(max_lr > 0.0, "TrainConfig: max_lr must be positive");
    require(warmup_steps >= 1, "TrainConfig: warmup_steps must be >= 1");
    require(total_steps >= 1, "TrainConfig: total_steps must be >= 1");
    require(warmup_steps <= total_steps, "TrainConfig: warmup_steps must not exceed total_steps");
    require(weight_decay >= 0.0, "TrainConfig: weight_decay must be nonnegative");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "TrainConfig: betas must lie in [0, 1)");
  }
};

// Linear warmup from 0, then half-cosine decay to 0 at total_steps.
// Steps past the end clamp to the final value.
inline double lr_at(std::size_t step, const TrainConfig& cfg) {
  step = std::min(step, cfg.total_steps);
  if (step <= cfg.warmup_steps)
    return cfg.max_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  const std::size_t span = cfg.total_steps - cfg.warmup_steps;
  const double progress = static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(span);
  return cfg.max_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

struct OptimState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step = 0;

  static OptimState for_params(const ModelParams& p) { return {zeros_like(p), zeros_like(p), 0}; }
};

// Decoupled weight decay followed by a bias-corrected Adam step.
inline void adamw_step(ModelParams& params, const GradientSet& grads, OptimState& state, double lr,
                       const TrainConfig& cfg) {
  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  visit_tensors(params, [&](std::span<double> d, const Shape&) { p.push_back(d); });
  visit_tensors(state.first_moment, [&](std::span<double> d, const Shape&) { m.push_back(d); });
  visit_tensors(state.second_moment, [&](std::span<double> d, const Shape&) { v.push_back(d); });
  visit_tensors(grads, [&](std::span<const double> d, const Shape&) { g.push_back(d); });
  require(p.size() == g.size() && p.size() == m.size() && p.size() == v.size(), "adamw_step: layout mismatch");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - lr * cfg.weight_decay;

  for (std::size_t k = 0; k < p.size(); ++k) {
    require(p[k].size() == g[k].size(), "adamw_step: tensor shape mismatch");
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = cfg.beta1 * m[k][i] + (1.0 - cfg.beta1) * gi;
      v[k][i] = cfg.beta2 * v[k][i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[k][i] / correction1;
      const double v_hat = v[k][i] / correction2;
      p[k][i] = p[k][i] * decay - lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

}  // namespace ctgraph
