#pragma once

// Clipped surrogate objective with asymmetric clip range, token-level or
// response-mean aggregation, and an adaptive-moment ascent optimizer with
// decoupled weight decay and warmup/cosine scheduling. No KL term anywhere.
//
// The old policy enters through the per-token log-probs recorded on each
// response at rollout time, which are exactly the snapshot's values.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "zvp/advantage.hpp"
#include "zvp/core.hpp"
#include "zvp/policy.hpp"

namespace zvp {

struct ClipConfig {
  double eps_low = 0.20;
  double eps_high = 0.28;

  void validate() const {
    if (!(0.0 < eps_low && eps_low <= eps_high && eps_high < 1.0)) {
      throw ConfigError("clip range must satisfy 0 < eps_low <= eps_high < 1");
    }
  }
};

enum class Aggregation { token_level, response_mean };

inline const char* to_string(Aggregation a) {
  return a == Aggregation::token_level ? "token_level" : "response_mean";
}

inline Aggregation aggregation_from_string(const std::string& s) {
  if (s == "token_level") return Aggregation::token_level;
  if (s == "response_mean") return Aggregation::response_mean;
  throw ConfigError("unknown aggregation: " + s);
}

inline double importance_ratio(double logp_new, double logp_old) {
  return std::exp(logp_new - logp_old);
}

inline double clip_ratio(double ratio, const ClipConfig& clip) {
  return std::clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high);
}

// min(r*A, clip(r)*A). Derivative w.r.t. the ratio is zero whenever the
// clipped branch is the selected minimum.
inline double clipped_term(double ratio, double advantage, const ClipConfig& clip) {
  return std::min(ratio * advantage, clip_ratio(ratio, clip) * advantage);
}

struct ObjectiveSettings {
  ClipConfig clip;
  Aggregation aggregation = Aggregation::token_level;
  // Sampling-time settings; the new-policy log-probs must be computed with
  // the same construction the rollouts recorded.
  double temperature = 1.0;
  double top_p = 1.0;
};

struct ObjectiveValue {
  double objective = 0.0;
  std::vector<double> gradient;
  std::size_t token_count = 0;
};

// Mean clipped surrogate over a mini-batch, ascended by the optimizer, with
// its exact gradient. token_level divides the sum of per-token terms by the
// total token count; response_mean averages per-response means per group and
// then over groups. Advantages are constants w.r.t. the parameters.
inline ObjectiveValue batch_objective(std::span<const RolloutGroup> groups,
                                      std::span<const AdvantageTensor> advantages,
                                      const PolicyParams& params,
                                      const ObjectiveSettings& settings) {
  settings.clip.validate();
  if (groups.size() != advantages.size()) {
    throw ContractViolation("objective: group/advantage count mismatch");
  }
  std::size_t total_tokens = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!shape_matches(advantages[g], groups[g])) {
      throw ContractViolation("objective: advantage tensor shape mismatch in group " +
                              std::to_string(g));
    }
    for (const Response& r : groups[g].responses) total_tokens += r.tokens.size();
  }
  if (total_tokens == 0) throw ContractViolation("objective: empty mini-batch");

  ObjectiveValue out;
  out.token_count = total_tokens;
  GradientAccumulator accum(params.dims());

  std::vector<double> weights;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const RolloutGroup& group = groups[g];
    for (std::size_t i = 0; i < group.size(); ++i) {
      const Response& resp = group.responses[i];
      const std::vector<double>& adv = advantages[g].values[i];
      const double norm =
          settings.aggregation == Aggregation::token_level
              ? 1.0 / static_cast<double>(total_tokens)
              : 1.0 / (static_cast<double>(groups.size()) *
                       static_cast<double>(group.size()) *
                       static_cast<double>(resp.tokens.size()));

      const std::vector<double> logp_new = response_logprobs(
          params, group.prompt, resp.tokens, settings.temperature, settings.top_p);

      weights.assign(resp.tokens.size(), 0.0);
      for (std::size_t t = 0; t < resp.tokens.size(); ++t) {
        const double a = adv[t];
        if (a == 0.0) continue;  // zero advantage contributes nothing
        const double r = std::exp(logp_new[t] - resp.logprobs_old[t]);
        const double unclipped = r * a;
        const double clipped = clip_ratio(r, settings.clip) * a;
        out.objective += norm * std::min(unclipped, clipped);
        // Gradient flows only through the selected unclipped branch; ties
        // (including the untouched interior where both coincide) keep it.
        if (unclipped <= clipped && std::isfinite(r)) {
          weights[t] = norm * a * r;
        }
      }
      accum.accumulate(params, group.prompt, resp.tokens, weights,
                       settings.temperature, settings.top_p);
    }
  }
  out.gradient = accum.take();
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

enum class LrSchedule { constant, cosine };

inline const char* to_string(LrSchedule s) {
  return s == LrSchedule::constant ? "constant" : "cosine";
}

inline LrSchedule lr_schedule_from_string(const std::string& s) {
  if (s == "constant") return LrSchedule::constant;
  if (s == "cosine") return LrSchedule::cosine;
  throw ConfigError("unknown lr schedule: " + s);
}

struct OptimizerConfig {
  double lr_max = 3e-3;
  LrSchedule schedule = LrSchedule::constant;
  int warmup_steps = 10;
  int total_steps = 0;  // required for the cosine schedule
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const {
    if (!(lr_max > 0.0)) throw ConfigError("lr_max must be > 0");
    if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
    if (schedule == LrSchedule::cosine && total_steps <= warmup_steps) {
      throw ConfigError("cosine schedule requires total_steps > warmup_steps");
    }
  }
};

// Learning rate at a 0-based step index: linear warmup lr*(s+1)/n, then the
// configured schedule.
inline double scheduled_lr(const OptimizerConfig& cfg, std::int64_t step) {
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
    return cfg.lr_max * static_cast<double>(step + 1) /
           static_cast<double>(cfg.warmup_steps);
  }
  if (cfg.schedule == LrSchedule::constant) return cfg.lr_max;
  const double span = static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  const double progress =
      std::clamp(static_cast<double>(step - cfg.warmup_steps) / span, 0.0, 1.0);
  constexpr double pi = 3.14159265358979323846;
  return cfg.lr_max * 0.5 * (1.0 + std::cos(pi * progress));
}

struct OptimizerState {
  OptimizerConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static OptimizerState init(const OptimizerConfig& cfg, std::size_t param_count) {
    cfg.validate();
    OptimizerState s;
    s.config = cfg;
    s.m.assign(param_count, 0.0);
    s.v.assign(param_count, 0.0);
    return s;
  }
};

// One ascent step with bias correction and decoupled weight decay. Throws
// RunAbort with the offending index when the gradient is non-finite.
inline void optimizer_step(PolicyParams& params, std::span<const double> gradient,
                           OptimizerState& state) {
  std::span<double> theta = params.values();
  if (gradient.size() != theta.size() || state.m.size() != theta.size()) {
    throw ContractViolation("optimizer: gradient/parameter shape mismatch");
  }
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    if (!std::isfinite(gradient[i])) {
      throw RunAbort("non-finite gradient at parameter " + std::to_string(i) +
                     " (value " + std::to_string(gradient[i]) + ") at optimizer step " +
                     std::to_string(state.step));
    }
  }

  const OptimizerConfig& cfg = state.config;
  const double lr = scheduled_lr(cfg, state.step);
  state.step += 1;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * gradient[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * gradient[i] * gradient[i];
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    theta[i] += lr * m_hat / (std::sqrt(v_hat) + cfg.eps) - lr * cfg.weight_decay * theta[i];
  }
}

}  // namespace zvp
