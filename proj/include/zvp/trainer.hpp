#pragma once

// Training loop: per iteration, snapshot the policy, assemble a prompt batch
// under the configured selection strategy, sample G responses per prompt from
// the snapshot, verify rewards once, then take mu = batch/minibatch gradient
// steps on shuffled minibatch partitions with mode-dispatched advantages.
// Emits one RunMetrics record per gradient step. Bit-reproducible from the
// master seed.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "zvp/advantage.hpp"
#include "zvp/core.hpp"
#include "zvp/env.hpp"
#include "zvp/objective.hpp"
#include "zvp/policy.hpp"
#include "zvp/rng.hpp"
#include "zvp/selection.hpp"

namespace zvp {

struct TrainConfig {
  // Loop shape
  int iterations = 150;
  int batch_size = 64;
  int minibatch_size = 8;
  int group_size = 8;       // G responses per prompt
  int max_response_len = 12;

  // Training-time sampling
  double temperature = 1.0;
  double top_p = 1.0;

  AdvantageConfig advantage;
  ClipConfig clip;
  Aggregation aggregation = Aggregation::token_level;
  SelectionConfig selection;
  OptimizerConfig optimizer;

  // Evaluation cadence and settings
  int eval_every = 10;
  int eval_k = 8;
  double eval_temperature = 1.0;
  double eval_top_p = 0.7;

  std::uint64_t seed = 1;

  // Policy and task shape (consumed by the harness to build datasets and the
  // initial policy; carried here so one config fully determines a run).
  PolicyDims dims;
  TaskSpec task;
  int train_size = 256;
  int eval_size = 128;

  int mu() const { return batch_size / minibatch_size; }

  void validate() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (batch_size < 1 || minibatch_size < 1) {
      throw ConfigError("batch_size and minibatch_size must be >= 1");
    }
    if (batch_size % minibatch_size != 0) {
      throw ConfigError("batch_size must be divisible by minibatch_size");
    }
    if (group_size < 2) throw ConfigError("group_size must be >= 2");
    if (max_response_len < 1) throw ConfigError("max_response_len must be >= 1");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("top_p must lie in (0, 1]");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (eval_k < 1) throw ConfigError("eval_k must be >= 1");
    if (!(eval_temperature > 0.0)) throw ConfigError("eval_temperature must be > 0");
    if (!(eval_top_p > 0.0) || eval_top_p > 1.0) throw ConfigError("eval_top_p must lie in (0, 1]");
    if (train_size < 1 || eval_size < 1) throw ConfigError("dataset sizes must be >= 1");
    advantage.validate();
    clip.validate();
    selection.validate();
    dims.validate();
  }

  // Optimizer config with the cosine horizon defaulted to the run length.
  OptimizerConfig resolved_optimizer() const {
    OptimizerConfig cfg = optimizer;
    if (cfg.schedule == LrSchedule::cosine && cfg.total_steps == 0) {
      cfg.total_steps = iterations * mu();
    }
    cfg.validate();
    return cfg;
  }

  // Budget targets are the passthrough-equivalent totals at this
  // configuration.
  std::int64_t target_rollouts() const {
    return static_cast<std::int64_t>(iterations) * batch_size * group_size;
  }
  std::int64_t target_grad_steps() const {
    return static_cast<std::int64_t>(iterations) * mu();
  }
};

inline double zero_variance_fraction(std::span<const RolloutGroup> batch) {
  if (batch.empty()) throw ContractViolation("zero_variance_fraction of empty batch");
  std::size_t zv = 0;
  for (const RolloutGroup& g : batch) {
    if (is_zero_variance(g)) zv += 1;
  }
  return static_cast<double>(zv) / static_cast<double>(batch.size());
}

struct TrainResult {
  PolicyParams policy;
  std::vector<RunMetrics> metrics;
  RolloutAccounting accounting;
  EvalResult final_eval;
  std::int64_t iterations_run = 0;
};

// Called once per iteration with the verified training batch, before the
// gradient steps. Used by tests and reporting; must not mutate the batch.
using BatchObserver = std::function<void(std::int64_t iteration, const std::vector<RolloutGroup>&)>;

namespace detail {

inline RolloutGroup rollout_group(const PolicySnapshot& snap, const TaskInstance& inst,
                                  const TrainConfig& cfg, Rng& rng) {
  RolloutGroup group;
  group.prompt = inst.prompt;
  group.responses.reserve(static_cast<std::size_t>(cfg.group_size));
  group.rewards.reserve(static_cast<std::size_t>(cfg.group_size));
  for (int i = 0; i < cfg.group_size; ++i) {
    Response resp = sample_response(snap.params(), inst.prompt, cfg.max_response_len,
                                    cfg.temperature, cfg.top_p, rng);
    group.rewards.push_back(verify(inst, resp));
    group.responses.push_back(std::move(resp));
  }
  return group;
}

inline bool all_zero(std::span<const double> v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

}  // namespace detail

inline TrainResult run_training(const TrainConfig& config, const Dataset& train_set,
                                const Dataset& eval_set, PolicyParams policy,
                                const BatchObserver& observer = {}) {
  config.validate();
  if (train_set.instances.empty()) throw ConfigError("training dataset is empty");
  if (config.dims != policy.dims()) throw ConfigError("policy dims do not match config dims");
  if (config.selection.strategy == SelectionStrategy::passthrough &&
      static_cast<std::size_t>(config.batch_size) > train_set.size()) {
    throw ConfigError("passthrough batch_size exceeds dataset size");
  }

  TrainResult result{std::move(policy), {}, {}, {}, 0};
  OptimizerState opt_state =
      OptimizerState::init(config.resolved_optimizer(), result.policy.values().size());
  DatasetCursor cursor(train_set.size(), config.seed);
  PromptHistory history;
  Rng skip_rng(derive_seed(config.seed, {seed_stream::skip_filter}));

  const ObjectiveSettings obj_settings{config.clip, config.aggregation,
                                       config.temperature, config.top_p};

  auto run_eval = [&](std::uint64_t tag) {
    return evaluate(result.policy, eval_set, config.eval_k, config.max_response_len,
                    config.eval_temperature, config.eval_top_p,
                    derive_seed(config.seed, {seed_stream::eval, tag}));
  };

  EvalResult latest_eval = run_eval(0);
  bool eval_is_final = true;

  const std::int64_t target_rollouts = config.target_rollouts();
  const std::int64_t target_grad_steps = config.target_grad_steps();
  auto budget_reached = [&] {
    return config.selection.budget_mode == BudgetMode::match_rollouts
               ? result.accounting.rollouts_total >= target_rollouts
               : result.accounting.grad_steps_total >= target_grad_steps;
  };

  for (std::int64_t iter = 0; !budget_reached(); ++iter) {
    const PolicySnapshot snap = snapshot(result.policy);

    // --- batch assembly under the snapshot ---
    std::vector<RolloutGroup> batch;
    std::int64_t rollout_slot = 0;
    auto rollout_at = [&](std::size_t idx) {
      Rng rng(derive_seed(config.seed,
                          {seed_stream::rollout, static_cast<std::uint64_t>(iter),
                           static_cast<std::uint64_t>(rollout_slot++)}));
      return detail::rollout_group(snap, train_set.instances[idx], config, rng);
    };

    switch (config.selection.strategy) {
      case SelectionStrategy::passthrough: {
        auto idxs = select_batch_passthrough(cursor, static_cast<std::size_t>(config.batch_size));
        if (!idxs) {
          cursor.advance_epoch();
          idxs = select_batch_passthrough(cursor, static_cast<std::size_t>(config.batch_size));
        }
        for (std::size_t idx : *idxs) batch.push_back(rollout_at(idx));
        result.accounting.rollouts_total +=
            static_cast<std::int64_t>(batch.size()) * config.group_size;
        break;
      }
      case SelectionStrategy::dynamic_sampling: {
        DynamicBatch dyn = select_batch_dynamic(
            cursor, static_cast<std::size_t>(config.batch_size), rollout_at,
            result.accounting, config.selection.max_oversample_factor);
        batch = std::move(dyn.groups);
        break;
      }
      case SelectionStrategy::probabilistic_filter: {
        const ProbabilisticBatch sel = select_batch_probabilistic(
            cursor, static_cast<std::size_t>(config.batch_size), history, skip_rng,
            [&](std::size_t idx) { return train_set.instances[idx].prompt.prompt_id; });
        for (std::size_t idx : sel.indices) batch.push_back(rollout_at(idx));
        result.accounting.rollouts_total +=
            static_cast<std::int64_t>(batch.size()) * config.group_size;
        break;
      }
    }

    if (observer) observer(iter, batch);

    // --- iteration-level metrics from the rollout batch ---
    const double zv_frac = zero_variance_fraction(batch);
    double entropy_sum = 0.0;
    std::int64_t token_count = 0;
    double len_sum = 0.0;
    std::int64_t response_count = 0;
    for (const RolloutGroup& g : batch) {
      for (const Response& r : g.responses) {
        for (double h : r.entropies) entropy_sum += h;
        token_count += static_cast<std::int64_t>(r.tokens.size());
        len_sum += static_cast<double>(r.tokens.size());
        response_count += 1;
      }
    }
    const double mean_entropy =
        token_count > 0 ? entropy_sum / static_cast<double>(token_count) : 0.0;
    const double mean_len =
        response_count > 0 ? len_sum / static_cast<double>(response_count) : 0.0;

    // --- minibatch partition (shuffle then chunk) ---
    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(config.seed,
                                {seed_stream::minibatch, static_cast<std::uint64_t>(iter)}));
    shuffle_rng.shuffle(order);

    for (std::size_t chunk_begin = 0; chunk_begin < order.size();
         chunk_begin += static_cast<std::size_t>(config.minibatch_size)) {
      const std::size_t chunk_end = std::min(
          order.size(), chunk_begin + static_cast<std::size_t>(config.minibatch_size));

      std::vector<RolloutGroup> mini;
      std::vector<AdvantageTensor> advs;
      mini.reserve(chunk_end - chunk_begin);
      for (std::size_t i = chunk_begin; i < chunk_end; ++i) {
        const RolloutGroup& group = batch[order[i]];
        if (needs_entropies(group, config.advantage) &&
            config.advantage.entropy_source == EntropySource::current) {
          EntropyMatrix entropies;
          entropies.reserve(group.size());
          for (const Response& r : group.responses) {
            entropies.push_back(response_entropies(result.policy, group.prompt, r.tokens));
          }
          advs.push_back(compute_advantages(group, config.advantage, entropies));
        } else {
          advs.push_back(compute_advantages(group, config.advantage));
        }
        mini.push_back(group);
      }

      const ObjectiveValue obj =
          batch_objective(mini, advs, result.policy, obj_settings);
      if (!std::isfinite(obj.objective)) {
        throw RunAbort("non-finite objective at iteration " + std::to_string(iter) +
                       ", grad step " + std::to_string(result.accounting.grad_steps_total));
      }
      const double step_lr = scheduled_lr(opt_state.config, opt_state.step);

      // A zero-signal minibatch leaves the parameters untouched (including
      // weight decay): the objective is identically zero there.
      if (!detail::all_zero(obj.gradient)) {
        try {
          optimizer_step(result.policy, obj.gradient, opt_state);
        } catch (const RunAbort& e) {
          throw RunAbort(std::string(e.what()) + " (iteration " + std::to_string(iter) + ")");
        }
      }

      result.accounting.grad_steps_total += 1;
      RunMetrics row;
      row.step = result.accounting.grad_steps_total;
      row.iteration = iter + 1;
      row.acc_at_k = latest_eval.acc_at_k;
      row.pass_at_k = latest_eval.pass_at_k;
      row.mean_entropy = mean_entropy;
      row.mean_response_len = mean_len;
      row.zv_fraction = zv_frac;
      row.rollouts_total = result.accounting.rollouts_total;
      row.grad_steps_total = result.accounting.grad_steps_total;
      row.lr = step_lr;
      result.metrics.push_back(row);
    }

    // --- post-training history updates for the pre-rollout filter ---
    if (config.selection.strategy == SelectionStrategy::probabilistic_filter) {
      for (const RolloutGroup& g : batch) {
        history.update(g.prompt.prompt_id, classify_outcome(g), config.selection.filter);
      }
    }

    result.iterations_run = iter + 1;
    eval_is_final = false;
    if ((iter + 1) % config.eval_every == 0) {
      latest_eval = run_eval(static_cast<std::uint64_t>(iter) + 1);
      eval_is_final = true;
    }
  }

  if (!eval_is_final) {
    latest_eval = run_eval(static_cast<std::uint64_t>(result.iterations_run) + 1);
  }
  result.final_eval = latest_eval;
  return result;
}

}  // namespace zvp
