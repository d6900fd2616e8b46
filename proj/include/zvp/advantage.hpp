#pragma once

// Per-token advantage computation. Mixed-reward groups get the group-relative
// normalization broadcast over tokens; zero-variance groups get the
// entropy-guided shaping: +alpha*H on all-correct groups, -alpha*(maxH - H)
// on all-incorrect ones. The dispatch generalizes plain GRPO, which assigns
// zero to zero-variance groups. Entropy values enter as constants and carry
// no gradient.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "zvp/core.hpp"

namespace zvp {

enum class AdvantageMode {
  grpo,
  rl_zvp,
  zvp_no_positive,
  zvp_no_negative,
  zvp_no_entropy_scaling,
};

inline const char* to_string(AdvantageMode m) {
  switch (m) {
    case AdvantageMode::grpo: return "grpo";
    case AdvantageMode::rl_zvp: return "rl_zvp";
    case AdvantageMode::zvp_no_positive: return "zvp_no_positive";
    case AdvantageMode::zvp_no_negative: return "zvp_no_negative";
    case AdvantageMode::zvp_no_entropy_scaling: return "zvp_no_entropy_scaling";
  }
  return "grpo";
}

inline AdvantageMode advantage_mode_from_string(const std::string& s) {
  if (s == "grpo") return AdvantageMode::grpo;
  if (s == "rl_zvp") return AdvantageMode::rl_zvp;
  if (s == "zvp_no_positive") return AdvantageMode::zvp_no_positive;
  if (s == "zvp_no_negative") return AdvantageMode::zvp_no_negative;
  if (s == "zvp_no_entropy_scaling") return AdvantageMode::zvp_no_entropy_scaling;
  throw ConfigError("unknown advantage mode: " + s);
}

// Where the entropies for the zero-variance branch come from: recomputed
// under the current policy at each gradient step, or frozen at rollout time.
enum class EntropySource { current, rollout };

inline const char* to_string(EntropySource s) {
  return s == EntropySource::current ? "current" : "rollout";
}

inline EntropySource entropy_source_from_string(const std::string& s) {
  if (s == "current") return EntropySource::current;
  if (s == "rollout") return EntropySource::rollout;
  throw ConfigError("unknown entropy source: " + s);
}

struct AdvantageConfig {
  double alpha = 0.10;
  AdvantageMode mode = AdvantageMode::rl_zvp;
  EntropySource entropy_source = EntropySource::current;

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  }
};

// Per-response entropies used by the zero-variance branch, shape-matched to
// the group's responses.
using EntropyMatrix = std::vector<std::vector<double>>;

namespace detail {

inline AdvantageTensor zero_tensor(const RolloutGroup& group, AdvantageOrigin origin) {
  AdvantageTensor out;
  out.origin = origin;
  out.values.reserve(group.size());
  for (const Response& r : group.responses) {
    out.values.emplace_back(r.tokens.size(), 0.0);
  }
  return out;
}

inline AdvantageTensor constant_tensor(const RolloutGroup& group, double value,
                                       AdvantageOrigin origin) {
  AdvantageTensor out;
  out.origin = origin;
  out.values.reserve(group.size());
  for (const Response& r : group.responses) {
    out.values.emplace_back(r.tokens.size(), value);
  }
  return out;
}

inline void check_entropy_shape(const RolloutGroup& group, const EntropyMatrix& entropies) {
  if (entropies.size() != group.size()) {
    throw ContractViolation("entropy matrix does not match group size");
  }
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (entropies[i].size() != group.responses[i].tokens.size()) {
      throw ContractViolation("entropy row " + std::to_string(i) +
                              " does not match response length");
    }
    if (entropies[i].empty()) {
      throw ContractViolation("response " + std::to_string(i) + " is empty");
    }
  }
}

inline EntropyMatrix recorded_entropies(const RolloutGroup& group) {
  EntropyMatrix out;
  out.reserve(group.size());
  for (const Response& r : group.responses) out.push_back(r.entropies);
  return out;
}

}  // namespace detail

// Group-relative normalization: (R_i - mean) / std per response, broadcast
// to every token. Callers must dispatch zero-variance groups elsewhere.
inline AdvantageTensor grpo_advantage(const RolloutGroup& group) {
  if (group.responses.size() != group.rewards.size()) {
    throw ContractViolation("group has " + std::to_string(group.responses.size()) +
                            " responses but " + std::to_string(group.rewards.size()) +
                            " rewards");
  }
  if (is_zero_variance(group)) {
    throw ContractViolation(
        "grpo_advantage called on a zero-variance group; dispatch first");
  }
  const GroupStats stats = group_reward_stats(group.rewards);
  AdvantageTensor out;
  out.origin = AdvantageOrigin::grpo;
  out.values.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a = (group.rewards[i] - stats.mean) / stats.stddev;
    out.values.emplace_back(group.responses[i].tokens.size(), a);
  }
  return out;
}

// Entropy-guided advantages for a zero-variance group. Positive groups get
// alpha*H per token; negative groups get -alpha*(maxH - H) with the max taken
// over each response's own tokens, so every response anchors its highest-
// entropy token at zero penalty.
inline AdvantageTensor zvp_advantage(const RolloutGroup& group, double alpha,
                                     const EntropyMatrix& entropies) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (group.responses.size() != group.rewards.size()) {
    throw ContractViolation("group responses/rewards size mismatch");
  }
  if (!is_zero_variance(group)) {
    throw ContractViolation(
        "zvp_advantage called on a mixed-reward group; dispatch first");
  }
  detail::check_entropy_shape(group, entropies);

  const bool positive = group.rewards[0] > 0.0;
  AdvantageTensor out;
  out.origin = positive ? AdvantageOrigin::zvp_positive : AdvantageOrigin::zvp_negative;
  out.values.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const std::vector<double>& h = entropies[i];
    std::vector<double> row(h.size());
    if (positive) {
      for (std::size_t t = 0; t < h.size(); ++t) row[t] = alpha * h[t];
    } else {
      double max_h = h[0];
      for (double v : h) max_h = std::max(max_h, v);
      for (std::size_t t = 0; t < h.size(); ++t) row[t] = -(alpha * (max_h - h[t]));
    }
    out.values.push_back(std::move(row));
  }
  return out;
}

inline AdvantageTensor zvp_advantage(const RolloutGroup& group, double alpha) {
  return zvp_advantage(group, alpha, detail::recorded_entropies(group));
}

// Mode dispatch over a verified group. Mixed-reward groups reduce to the
// group-relative normalization under every mode; zero-variance groups follow
// the configured treatment. `entropies` feeds the zero-variance branch.
inline AdvantageTensor compute_advantages(const RolloutGroup& group,
                                          const AdvantageConfig& config,
                                          const EntropyMatrix& entropies) {
  config.validate();
  if (!is_zero_variance(group)) {
    return grpo_advantage(group);
  }
  const bool positive = group.rewards[0] > 0.0;
  switch (config.mode) {
    case AdvantageMode::grpo:
      return detail::zero_tensor(group, AdvantageOrigin::grpo);
    case AdvantageMode::rl_zvp:
      return zvp_advantage(group, config.alpha, entropies);
    case AdvantageMode::zvp_no_positive:
      if (positive) return detail::zero_tensor(group, AdvantageOrigin::grpo);
      return zvp_advantage(group, config.alpha, entropies);
    case AdvantageMode::zvp_no_negative:
      if (!positive) return detail::zero_tensor(group, AdvantageOrigin::grpo);
      return zvp_advantage(group, config.alpha, entropies);
    case AdvantageMode::zvp_no_entropy_scaling:
      // Sample-level +1/-1 only; alpha is unused in this mode.
      return detail::constant_tensor(group, positive ? 1.0 : -1.0,
                                     positive ? AdvantageOrigin::zvp_positive
                                              : AdvantageOrigin::zvp_negative);
  }
  throw ContractViolation("unreachable advantage mode");
}

inline AdvantageTensor compute_advantages(const RolloutGroup& group,
                                          const AdvantageConfig& config) {
  if (!is_zero_variance(group)) return grpo_advantage(group);
  return compute_advantages(group, config, detail::recorded_entropies(group));
}

// True when the configured mode will actually read entropies for this group,
// letting callers skip recomputing them otherwise.
inline bool needs_entropies(const RolloutGroup& group, const AdvantageConfig& config) {
  if (!is_zero_variance(group)) return false;
  const bool positive = group.rewards[0] > 0.0;
  switch (config.mode) {
    case AdvantageMode::rl_zvp: return true;
    case AdvantageMode::zvp_no_positive: return !positive;
    case AdvantageMode::zvp_no_negative: return positive;
    case AdvantageMode::grpo:
    case AdvantageMode::zvp_no_entropy_scaling: return false;
  }
  return false;
}

}  // namespace zvp
