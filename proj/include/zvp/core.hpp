#pragma once

// Shared domain model: prompts, sampled responses, rollout groups with
// verified rewards, advantage tensors and per-step run metrics. All types
// are plain values, immutable by convention after construction, and safe
// to share across parallel workers.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace zvp {

using TokenId = std::int32_t;

// A caller broke a documented precondition (wrong dispatch, shape mismatch,
// undersized group).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Invalid configuration: dimensions, file schemas, vocabulary capacity.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered mid-run; carries the offending diagnostic.
struct RunAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dynamic sampling exhausted its oversampling cap without assembling a
// single usable group.
struct DegenerateBatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Tier { easy, medium, hard };

inline const char* to_string(Tier t) {
  switch (t) {
    case Tier::easy: return "easy";
    case Tier::medium: return "medium";
    case Tier::hard: return "hard";
  }
  return "easy";
}

inline Tier tier_from_string(const std::string& s) {
  if (s == "easy") return Tier::easy;
  if (s == "medium") return Tier::medium;
  if (s == "hard") return Tier::hard;
  throw ConfigError("unknown tier: " + s);
}

// Verifier output is binary and signed so that the all-correct (R > 0) and
// all-incorrect (R <= 0) branches are both reachable and unambiguous.
inline constexpr double kRewardCorrect = 1.0;
inline constexpr double kRewardIncorrect = -1.0;

struct Prompt {
  std::vector<TokenId> tokens;
  std::int64_t prompt_id = 0;
  Tier tier = Tier::easy;
};

// One sampled continuation: generated tokens only, with the log-probs the
// sampling-time policy assigned them and the per-token entropy of the full
// untruncated distribution.
struct Response {
  std::vector<TokenId> tokens;
  std::vector<double> logprobs_old;
  std::vector<double> entropies;
  bool terminated = false;

  std::size_t length() const { return tokens.size(); }
};

// A prompt with its group of sampled responses and verified rewards; the
// unit over which advantages are computed.
struct RolloutGroup {
  Prompt prompt;
  std::vector<Response> responses;
  std::vector<double> rewards;

  std::size_t size() const { return responses.size(); }
};

enum class AdvantageOrigin { grpo, zvp_positive, zvp_negative };

// Per-response, per-token advantages, shape-matched to the group that
// produced them. Origin records which branch built the tensor.
struct AdvantageTensor {
  std::vector<std::vector<double>> values;
  AdvantageOrigin origin = AdvantageOrigin::grpo;
};

// One record per gradient step. acc/pass carry the most recent evaluation;
// counters are cumulative over the run.
struct RunMetrics {
  std::int64_t step = 0;
  std::int64_t iteration = 0;
  double acc_at_k = 0.0;
  double pass_at_k = 0.0;
  double mean_entropy = 0.0;
  double mean_response_len = 0.0;
  double zv_fraction = 0.0;
  std::int64_t rollouts_total = 0;
  std::int64_t grad_steps_total = 0;
  double lr = 0.0;
};

struct GroupStats {
  double mean = 0.0;
  double stddev = 0.0;
};

// Mean and population standard deviation (divisor G) of a reward group.
// With the signed binary reward scheme, stddev is exactly 0 iff all rewards
// are equal, so no epsilon is ever added downstream.
inline GroupStats group_reward_stats(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw ContractViolation("reward group needs at least 2 members, got " +
                            std::to_string(rewards.size()));
  }
  double sum = 0.0;
  for (double r : rewards) sum += r;
  const double mean = sum / static_cast<double>(rewards.size());
  double sq = 0.0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  return {mean, std::sqrt(sq / static_cast<double>(rewards.size()))};
}

// True iff every reward in the group is identical. Rewards are exactly
// representable (+1/-1), so the comparison is exact.
inline bool is_zero_variance(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw ContractViolation("reward group needs at least 2 members, got " +
                            std::to_string(rewards.size()));
  }
  for (double r : rewards) {
    if (r != rewards[0]) return false;
  }
  return true;
}

inline bool is_zero_variance(const RolloutGroup& group) {
  return is_zero_variance(std::span<const double>(group.rewards));
}

// Shape check used by the advantage and objective layers.
inline bool shape_matches(const AdvantageTensor& adv, const RolloutGroup& group) {
  if (adv.values.size() != group.responses.size()) return false;
  for (std::size_t i = 0; i < adv.values.size(); ++i) {
    if (adv.values[i].size() != group.responses[i].tokens.size()) return false;
  }
  return true;
}

}  // namespace zvp
