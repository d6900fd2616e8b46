#pragma once

// Prompt selection strategies and rollout/step accounting: plain epoch
// passthrough, dynamic sampling (oversample and discard zero-variance
// groups), and a probabilistic pre-rollout filter that skips prompts with a
// history of zero-variance outcomes. The filter follows the published
// constants (alpha_easy, alpha_hard, p_easy, p_hard, delta_p, beta) with a
// reconstructed update rule, documented in README.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "zvp/core.hpp"
#include "zvp/rng.hpp"

namespace zvp {

enum class SelectionStrategy { passthrough, dynamic_sampling, probabilistic_filter };

inline const char* to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::passthrough: return "passthrough";
    case SelectionStrategy::dynamic_sampling: return "dynamic_sampling";
    case SelectionStrategy::probabilistic_filter: return "probabilistic_filter";
  }
  return "passthrough";
}

inline SelectionStrategy selection_strategy_from_string(const std::string& s) {
  if (s == "passthrough") return SelectionStrategy::passthrough;
  if (s == "dynamic_sampling") return SelectionStrategy::dynamic_sampling;
  if (s == "probabilistic_filter") return SelectionStrategy::probabilistic_filter;
  throw ConfigError("unknown selection strategy: " + s);
}

// Budget under which a run stops: at the passthrough-equivalent rollout
// total, or at the passthrough-equivalent gradient-step total. For
// passthrough itself the two coincide.
enum class BudgetMode { match_grad_steps, match_rollouts };

inline const char* to_string(BudgetMode m) {
  return m == BudgetMode::match_grad_steps ? "match_grad_steps" : "match_rollouts";
}

inline BudgetMode budget_mode_from_string(const std::string& s) {
  if (s == "match_grad_steps") return BudgetMode::match_grad_steps;
  if (s == "match_rollouts") return BudgetMode::match_rollouts;
  throw ConfigError("unknown budget mode: " + s);
}

struct FilterParams {
  double alpha_easy = 1.0 / 12.0;
  double alpha_hard = 1.0 / 6.0;
  double p_easy = 0.5;
  double p_hard = 0.5;
  double delta_p = 0.01;
  double beta = 1.25;

  void validate() const {
    if (p_easy < 0.0 || p_easy > 1.0 || p_hard < 0.0 || p_hard > 1.0) {
      throw ConfigError("skip probability caps must lie in [0, 1]");
    }
    if (delta_p < 0.0 || alpha_easy < 0.0 || alpha_hard < 0.0 || beta < 0.0) {
      throw ConfigError("filter parameters must be non-negative");
    }
  }
};

struct SelectionConfig {
  SelectionStrategy strategy = SelectionStrategy::passthrough;
  BudgetMode budget_mode = BudgetMode::match_grad_steps;
  FilterParams filter;
  int max_oversample_factor = 64;

  void validate() const {
    filter.validate();
    if (max_oversample_factor < 1) throw ConfigError("max_oversample_factor must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Epoch cursor
// ---------------------------------------------------------------------------

// Without-replacement prompt stream: each epoch is a seeded reshuffle of the
// dataset indices.
class DatasetCursor {
 public:
  DatasetCursor(std::size_t dataset_size, std::uint64_t seed)
      : size_(dataset_size), rng_(derive_seed(seed, {seed_stream::cursor})) {
    if (dataset_size == 0) throw ContractViolation("cursor over empty dataset");
    order_.resize(dataset_size);
    for (std::size_t i = 0; i < dataset_size; ++i) order_[i] = i;
    reshuffle();
  }

  std::size_t dataset_size() const { return size_; }
  std::size_t remaining() const { return size_ - pos_; }
  std::int64_t epoch() const { return epoch_; }

  void advance_epoch() {
    epoch_ += 1;
    pos_ = 0;
    reshuffle();
  }

  // Next n prompts without replacement within the epoch; nullopt signals the
  // epoch boundary (fewer than n remain).
  std::optional<std::vector<std::size_t>> next_batch(std::size_t n) {
    if (remaining() < n) return std::nullopt;
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  // Single draw that rolls into a fresh epoch when the current one is spent.
  std::size_t next() {
    if (remaining() == 0) advance_epoch();
    return order_[pos_++];
  }

 private:
  void reshuffle() { rng_.shuffle(order_); }

  std::size_t size_;
  std::size_t pos_ = 0;
  std::int64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  Rng rng_;
};

inline std::optional<std::vector<std::size_t>> select_batch_passthrough(
    DatasetCursor& cursor, std::size_t batch_size) {
  return cursor.next_batch(batch_size);
}

// ---------------------------------------------------------------------------
// Accounting
// ---------------------------------------------------------------------------

struct RolloutAccounting {
  std::int64_t rollouts_total = 0;
  std::int64_t grad_steps_total = 0;
};

struct AccountingRow {
  std::string method;
  std::int64_t rollouts_total = 0;
  std::int64_t grad_steps_total = 0;
  double rollout_multiplier = 0.0;  // vs passthrough at equal configuration
};

inline AccountingRow make_accounting_row(const std::string& method,
                                         const RolloutAccounting& acct,
                                         std::int64_t passthrough_rollouts) {
  AccountingRow row;
  row.method = method;
  row.rollouts_total = acct.rollouts_total;
  row.grad_steps_total = acct.grad_steps_total;
  row.rollout_multiplier =
      static_cast<double>(acct.rollouts_total) / static_cast<double>(passthrough_rollouts);
  return row;
}

// ---------------------------------------------------------------------------
// Dynamic sampling
// ---------------------------------------------------------------------------

struct DynamicBatch {
  std::vector<RolloutGroup> groups;  // all satisfy std({R_i}) > 0
  std::int64_t prompts_consumed = 0;
  bool truncated = false;  // cap hit before batch_size groups were found
};

// Oversamples prompts, generating a full group per prompt and discarding
// zero-variance ones, until batch_size usable groups are collected or
// max_oversample_factor * batch_size prompts have been consumed. Discarded
// rollouts still count toward the accounting.
inline DynamicBatch select_batch_dynamic(
    DatasetCursor& cursor, std::size_t batch_size,
    const std::function<RolloutGroup(std::size_t)>& rollout_fn,
    RolloutAccounting& accounting, int max_oversample_factor) {
  if (batch_size == 0) throw ContractViolation("batch_size must be >= 1");
  DynamicBatch out;
  const std::int64_t cap =
      static_cast<std::int64_t>(max_oversample_factor) * static_cast<std::int64_t>(batch_size);
  while (out.groups.size() < batch_size && out.prompts_consumed < cap) {
    const std::size_t idx = cursor.next();
    RolloutGroup group = rollout_fn(idx);
    out.prompts_consumed += 1;
    accounting.rollouts_total += static_cast<std::int64_t>(group.size());
    if (!is_zero_variance(group)) {
      out.groups.push_back(std::move(group));
    }
  }
  if (out.groups.empty()) {
    throw DegenerateBatch("dynamic sampling found no mixed-reward group in " +
                          std::to_string(out.prompts_consumed) + " prompts (cap " +
                          std::to_string(max_oversample_factor) + "x batch)");
  }
  out.truncated = out.groups.size() < batch_size;
  return out;
}

// ---------------------------------------------------------------------------
// Probabilistic pre-rollout filter
// ---------------------------------------------------------------------------

enum class GroupOutcome { mixed, all_correct, all_incorrect };

inline GroupOutcome classify_outcome(const RolloutGroup& group) {
  if (!is_zero_variance(group)) return GroupOutcome::mixed;
  return group.rewards[0] > 0.0 ? GroupOutcome::all_correct : GroupOutcome::all_incorrect;
}

// Per-prompt skip state. A zero-variance outcome raises the skip probability
// by delta_p scaled with the class rate, escalated by beta on consecutive
// zero-variance outcomes and capped per class; a mixed outcome resets it.
// Epochs where the prompt was skipped leave the streak untouched.
class PromptHistory {
 public:
  struct Record {
    double skip_prob = 0.0;
    int zv_streak = 0;
  };

  double skip_prob(std::int64_t prompt_id) const {
    const auto it = records_.find(prompt_id);
    return it == records_.end() ? 0.0 : it->second.skip_prob;
  }

  const Record* find(std::int64_t prompt_id) const {
    const auto it = records_.find(prompt_id);
    return it == records_.end() ? nullptr : &it->second;
  }

  void update(std::int64_t prompt_id, GroupOutcome outcome, const FilterParams& fp) {
    Record& rec = records_[prompt_id];
    if (outcome == GroupOutcome::mixed) {
      rec = Record{};
      return;
    }
    const bool easy = outcome == GroupOutcome::all_correct;
    rec.zv_streak += 1;
    double p = rec.skip_prob + fp.delta_p * (easy ? fp.alpha_easy : fp.alpha_hard);
    if (rec.zv_streak >= 2) p *= fp.beta;
    rec.skip_prob = std::min(p, easy ? fp.p_easy : fp.p_hard);
  }

  std::size_t size() const { return records_.size(); }

 private:
  std::unordered_map<std::int64_t, Record> records_;
};

struct ProbabilisticBatch {
  std::vector<std::size_t> indices;
  std::int64_t skipped = 0;
};

// Draws candidates and skips each with its current skip probability; skipped
// prompts cost no rollouts. Unseen prompts are never skipped.
inline ProbabilisticBatch select_batch_probabilistic(
    DatasetCursor& cursor, std::size_t batch_size, const PromptHistory& history,
    Rng& skip_rng, const std::function<std::int64_t(std::size_t)>& prompt_id_of) {
  if (batch_size == 0) throw ContractViolation("batch_size must be >= 1");
  ProbabilisticBatch out;
  // With caps <= 1 the loop terminates with probability 1; the guard catches
  // a filter misconfigured to always skip.
  const std::int64_t guard =
      1000 * static_cast<std::int64_t>(std::max<std::size_t>(batch_size, 8));
  std::int64_t drawn = 0;
  while (out.indices.size() < batch_size) {
    if (++drawn > guard) {
      throw DegenerateBatch("probabilistic filter failed to assemble a batch after " +
                            std::to_string(drawn - 1) + " draws");
    }
    const std::size_t idx = cursor.next();
    const double p = history.skip_prob(prompt_id_of(idx));
    if (p > 0.0 && skip_rng.uniform() < p) {
      out.skipped += 1;
      continue;
    }
    out.indices.push_back(idx);
  }
  return out;
}

}  // namespace zvp
