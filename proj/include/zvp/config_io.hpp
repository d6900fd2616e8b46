#pragma once

// TrainConfig <-> JSON. Every field is a flat key; unknown keys are rejected
// so typos fail loudly. CLI flags mirror these key names and override file
// values.

#include <fstream>
#include <string>

#include <json.hpp>

#include "zvp/trainer.hpp"

namespace zvp {

using json = nlohmann::json;

inline json config_to_json(const TrainConfig& c) {
  json j;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["minibatch_size"] = c.minibatch_size;
  j["group_size"] = c.group_size;
  j["max_response_len"] = c.max_response_len;
  j["temperature"] = c.temperature;
  j["top_p"] = c.top_p;
  j["alpha"] = c.advantage.alpha;
  j["advantage_mode"] = to_string(c.advantage.mode);
  j["entropy_source"] = to_string(c.advantage.entropy_source);
  j["eps_low"] = c.clip.eps_low;
  j["eps_high"] = c.clip.eps_high;
  j["aggregation"] = to_string(c.aggregation);
  j["strategy"] = to_string(c.selection.strategy);
  j["budget_mode"] = to_string(c.selection.budget_mode);
  j["alpha_easy"] = c.selection.filter.alpha_easy;
  j["alpha_hard"] = c.selection.filter.alpha_hard;
  j["p_easy"] = c.selection.filter.p_easy;
  j["p_hard"] = c.selection.filter.p_hard;
  j["delta_p"] = c.selection.filter.delta_p;
  j["beta"] = c.selection.filter.beta;
  j["max_oversample_factor"] = c.selection.max_oversample_factor;
  j["lr"] = c.optimizer.lr_max;
  j["lr_schedule"] = to_string(c.optimizer.schedule);
  j["warmup_steps"] = c.optimizer.warmup_steps;
  j["total_steps"] = c.optimizer.total_steps;
  j["adam_beta1"] = c.optimizer.beta1;
  j["adam_beta2"] = c.optimizer.beta2;
  j["adam_eps"] = c.optimizer.eps;
  j["weight_decay"] = c.optimizer.weight_decay;
  j["eval_every"] = c.eval_every;
  j["eval_k"] = c.eval_k;
  j["eval_temperature"] = c.eval_temperature;
  j["eval_top_p"] = c.eval_top_p;
  j["seed"] = c.seed;
  j["vocab_size"] = c.dims.vocab_size;
  j["embed_dim"] = c.dims.embed_dim;
  j["hidden_dim"] = c.dims.hidden_dim;
  j["context_window"] = c.dims.window;
  j["task_family"] = to_string(c.task.family);
  j["modulus"] = c.task.modulus;
  j["seq_len"] = c.task.seq_len;
  j["chain_depth"] = c.task.chain_depth;
  j["tier_easy"] = c.task.tier_mix.easy;
  j["tier_medium"] = c.task.tier_mix.medium;
  j["tier_hard"] = c.task.tier_mix.hard;
  j["train_size"] = c.train_size;
  j["eval_size"] = c.eval_size;
  return j;
}

inline TrainConfig config_from_json(const json& j, TrainConfig base = {}) {
  const json reference = config_to_json(base);
  for (const auto& [key, value] : j.items()) {
    if (!reference.contains(key)) throw ConfigError("unknown config key: " + key);
    (void)value;
  }
  TrainConfig c = base;
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) {
      try {
        slot = j.at(key).get<std::remove_reference_t<decltype(slot)>>();
      } catch (const json::exception& e) {
        throw ConfigError("bad value for config key '" + std::string(key) + "': " + e.what());
      }
    }
  };
  auto get_enum = [&](const char* key, auto& slot, auto parse) {
    if (j.contains(key)) {
      if (!j.at(key).is_string()) throw ConfigError(std::string(key) + " must be a string");
      slot = parse(j.at(key).get<std::string>());
    }
  };

  get("iterations", c.iterations);
  get("batch_size", c.batch_size);
  get("minibatch_size", c.minibatch_size);
  get("group_size", c.group_size);
  get("max_response_len", c.max_response_len);
  get("temperature", c.temperature);
  get("top_p", c.top_p);
  get("alpha", c.advantage.alpha);
  get_enum("advantage_mode", c.advantage.mode, advantage_mode_from_string);
  get_enum("entropy_source", c.advantage.entropy_source, entropy_source_from_string);
  get("eps_low", c.clip.eps_low);
  get("eps_high", c.clip.eps_high);
  get_enum("aggregation", c.aggregation, aggregation_from_string);
  get_enum("strategy", c.selection.strategy, selection_strategy_from_string);
  get_enum("budget_mode", c.selection.budget_mode, budget_mode_from_string);
  get("alpha_easy", c.selection.filter.alpha_easy);
  get("alpha_hard", c.selection.filter.alpha_hard);
  get("p_easy", c.selection.filter.p_easy);
  get("p_hard", c.selection.filter.p_hard);
  get("delta_p", c.selection.filter.delta_p);
  get("beta", c.selection.filter.beta);
  get("max_oversample_factor", c.selection.max_oversample_factor);
  get("lr", c.optimizer.lr_max);
  get_enum("lr_schedule", c.optimizer.schedule, lr_schedule_from_string);
  get("warmup_steps", c.optimizer.warmup_steps);
  get("total_steps", c.optimizer.total_steps);
  get("adam_beta1", c.optimizer.beta1);
  get("adam_beta2", c.optimizer.beta2);
  get("adam_eps", c.optimizer.eps);
  get("weight_decay", c.optimizer.weight_decay);
  get("eval_every", c.eval_every);
  get("eval_k", c.eval_k);
  get("eval_temperature", c.eval_temperature);
  get("eval_top_p", c.eval_top_p);
  get("seed", c.seed);
  get("vocab_size", c.dims.vocab_size);
  get("embed_dim", c.dims.embed_dim);
  get("hidden_dim", c.dims.hidden_dim);
  get("context_window", c.dims.window);
  get_enum("task_family", c.task.family, task_family_from_string);
  get("modulus", c.task.modulus);
  get("seq_len", c.task.seq_len);
  get("chain_depth", c.task.chain_depth);
  get("tier_easy", c.task.tier_mix.easy);
  get("tier_medium", c.task.tier_mix.medium);
  get("tier_hard", c.task.tier_mix.hard);
  get("train_size", c.train_size);
  get("eval_size", c.eval_size);
  return c;
}

inline TrainConfig load_config(const std::string& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object: " + path);
  return config_from_json(j, base);
}

// Applies a textual override (CLI flag) onto a config JSON object. The value
// is parsed as JSON when possible, otherwise taken as a string.
inline void apply_override(json& cfg, const std::string& key, const std::string& value) {
  const json reference = config_to_json(TrainConfig{});
  if (!reference.contains(key)) throw ConfigError("unknown config key: " + key);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  if (reference.at(key).is_string() && !parsed.is_string()) parsed = value;
  cfg[key] = parsed;
}

}  // namespace zvp
