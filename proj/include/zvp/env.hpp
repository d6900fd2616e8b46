#pragma once

// Synthetic verifiable tasks with exact verifiers, standing in for math
// benchmarks. Three families over a digit alphabet:
//   mod_sum      prompt (a, b)        -> answer (a+b) mod m, then eos
//   copy_reverse prompt d1..dn        -> answer dn..d1, then eos
//   chain_eval   prompt d0 op1 d1 ... -> running results mod m, then eos
// Tier controls instance difficulty so training batches exhibit a tunable
// zero-variance fraction. Rewards are exact-match only: +1 or -1.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "zvp/core.hpp"
#include "zvp/policy.hpp"
#include "zvp/rng.hpp"

namespace zvp {

enum class TaskFamily { mod_sum, copy_reverse, chain_eval };

inline const char* to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::mod_sum: return "mod_sum";
    case TaskFamily::copy_reverse: return "copy_reverse";
    case TaskFamily::chain_eval: return "chain_eval";
  }
  return "mod_sum";
}

inline TaskFamily task_family_from_string(const std::string& s) {
  if (s == "mod_sum") return TaskFamily::mod_sum;
  if (s == "copy_reverse") return TaskFamily::copy_reverse;
  if (s == "chain_eval") return TaskFamily::chain_eval;
  throw ConfigError("unknown task family: " + s);
}

struct TierMix {
  double easy = 1.0;
  double medium = 0.0;
  double hard = 0.0;

  void validate() const {
    if (easy < 0.0 || medium < 0.0 || hard < 0.0) {
      throw ConfigError("tier fractions must be non-negative");
    }
    if (std::abs(easy + medium + hard - 1.0) > 1e-9) {
      throw ConfigError("tier fractions must sum to 1");
    }
  }
};

struct TaskSpec {
  TaskFamily family = TaskFamily::copy_reverse;
  int modulus = 10;      // digit alphabet size; answers live in [0, modulus)
  int seq_len = 3;       // copy_reverse medium-tier string length
  int chain_depth = 2;   // chain_eval medium-tier operation count
  TierMix tier_mix;
};

struct TaskInstance {
  Prompt prompt;
  std::vector<TokenId> answer_key;  // non-empty, ends with eos
};

struct Dataset {
  TaskSpec spec;
  int vocab_size = 18;
  std::vector<TaskInstance> instances;

  std::size_t size() const { return instances.size(); }
};

// chain_eval operator token ids sit directly above the digit alphabet.
inline TokenId plus_token(const TaskSpec& spec) { return spec.modulus; }
inline TokenId minus_token(const TaskSpec& spec) { return spec.modulus + 1; }

inline int tier_string_len(const TaskSpec& spec, Tier tier) {
  switch (tier) {
    case Tier::easy: return std::max(1, spec.seq_len - 1);
    case Tier::medium: return spec.seq_len;
    case Tier::hard: return spec.seq_len + 2;
  }
  return spec.seq_len;
}

inline int tier_chain_depth(const TaskSpec& spec, Tier tier) {
  switch (tier) {
    case Tier::easy: return std::max(1, spec.chain_depth - 1);
    case Tier::medium: return spec.chain_depth;
    case Tier::hard: return spec.chain_depth * 2;
  }
  return spec.chain_depth;
}

// Longest answer (including eos) the spec can emit; lets callers check the
// response-length cap up front.
inline int max_answer_len(const TaskSpec& spec) {
  switch (spec.family) {
    case TaskFamily::mod_sum: return 2;
    case TaskFamily::copy_reverse: return tier_string_len(spec, Tier::hard) + 1;
    case TaskFamily::chain_eval: return tier_chain_depth(spec, Tier::hard) + 1;
  }
  return 2;
}

inline void validate_task_spec(const TaskSpec& spec, int vocab_size) {
  if (spec.modulus < 2) throw ConfigError("modulus must be >= 2");
  if (spec.seq_len < 1) throw ConfigError("seq_len must be >= 1");
  if (spec.chain_depth < 1) throw ConfigError("chain_depth must be >= 1");
  spec.tier_mix.validate();
  const int payload = vocab_size - 2;
  const int needed = spec.family == TaskFamily::chain_eval ? spec.modulus + 2 : spec.modulus;
  if (needed > payload) {
    throw ConfigError(std::string(to_string(spec.family)) + " needs " +
                      std::to_string(needed) + " payload tokens but the vocabulary has " +
                      std::to_string(payload));
  }
}

namespace detail {

inline TaskInstance make_mod_sum(const TaskSpec& spec, Tier tier, TokenId eos, Rng& rng) {
  const int m = spec.modulus;
  int a = 0;
  int b = 0;
  for (;;) {
    a = static_cast<int>(rng.uniform_int(0, m - 1));
    b = static_cast<int>(rng.uniform_int(0, m - 1));
    if (tier == Tier::easy && a + b >= m) continue;   // no modular wrap
    if (tier == Tier::hard && a + b < m) continue;    // wrap required
    break;
  }
  TaskInstance inst;
  inst.prompt.tokens = {static_cast<TokenId>(a), static_cast<TokenId>(b)};
  inst.answer_key = {static_cast<TokenId>((a + b) % m), eos};
  return inst;
}

inline TaskInstance make_copy_reverse(const TaskSpec& spec, Tier tier, TokenId eos, Rng& rng) {
  const int len = tier_string_len(spec, tier);
  TaskInstance inst;
  inst.prompt.tokens.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    inst.prompt.tokens.push_back(static_cast<TokenId>(rng.uniform_int(0, spec.modulus - 1)));
  }
  inst.answer_key.assign(inst.prompt.tokens.rbegin(), inst.prompt.tokens.rend());
  inst.answer_key.push_back(eos);
  return inst;
}

inline TaskInstance make_chain_eval(const TaskSpec& spec, Tier tier, TokenId eos, Rng& rng) {
  const int depth = tier_chain_depth(spec, tier);
  const int m = spec.modulus;
  TaskInstance inst;
  int value = static_cast<int>(rng.uniform_int(0, m - 1));
  inst.prompt.tokens.push_back(static_cast<TokenId>(value));
  for (int k = 0; k < depth; ++k) {
    const bool plus = rng.uniform_int(0, 1) == 0;
    const int operand = static_cast<int>(rng.uniform_int(0, m - 1));
    inst.prompt.tokens.push_back(plus ? plus_token(spec) : minus_token(spec));
    inst.prompt.tokens.push_back(static_cast<TokenId>(operand));
    value = ((plus ? value + operand : value - operand) % m + m) % m;
    inst.answer_key.push_back(static_cast<TokenId>(value));
  }
  inst.answer_key.push_back(eos);
  return inst;
}

// Largest-remainder allocation of n instances to tier fractions.
inline std::vector<int> tier_counts(const TierMix& mix, int n) {
  const double fracs[3] = {mix.easy, mix.medium, mix.hard};
  std::vector<int> counts(3);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fracs[i] * n;
    counts[static_cast<std::size_t>(i)] = static_cast<int>(exact);
    assigned += counts[static_cast<std::size_t>(i)];
    remainders.push_back({exact - counts[static_cast<std::size_t>(i)], i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; assigned < n; ++i, ++assigned) {
    counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i % 3)].second)] += 1;
  }
  return counts;
}

}  // namespace detail

inline Dataset generate_dataset(const TaskSpec& spec, int count, std::uint64_t seed,
                                int vocab_size) {
  if (count < 1) throw ConfigError("dataset size must be >= 1");
  validate_task_spec(spec, vocab_size);
  PolicyDims probe;
  probe.vocab_size = vocab_size;
  const TokenId eos = static_cast<TokenId>(probe.eos_id());

  Dataset out;
  out.spec = spec;
  out.vocab_size = vocab_size;
  out.instances.reserve(static_cast<std::size_t>(count));

  const std::vector<int> counts = detail::tier_counts(spec.tier_mix, count);
  std::vector<Tier> tiers;
  tiers.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < counts[0]; ++i) tiers.push_back(Tier::easy);
  for (int i = 0; i < counts[1]; ++i) tiers.push_back(Tier::medium);
  for (int i = 0; i < counts[2]; ++i) tiers.push_back(Tier::hard);

  Rng rng(derive_seed(seed, {seed_stream::dataset}));
  for (int i = 0; i < count; ++i) {
    const Tier tier = tiers[static_cast<std::size_t>(i)];
    TaskInstance inst;
    switch (spec.family) {
      case TaskFamily::mod_sum: inst = detail::make_mod_sum(spec, tier, eos, rng); break;
      case TaskFamily::copy_reverse: inst = detail::make_copy_reverse(spec, tier, eos, rng); break;
      case TaskFamily::chain_eval: inst = detail::make_chain_eval(spec, tier, eos, rng); break;
    }
    inst.prompt.prompt_id = i;
    inst.prompt.tier = tier;
    out.instances.push_back(std::move(inst));
  }
  return out;
}

// Exact-match verification. The response must reproduce the answer key
// token-for-token including the terminal eos; truncated responses fail.
inline double verify(const TaskInstance& instance, const Response& response) {
  return response.tokens == instance.answer_key ? kRewardCorrect : kRewardIncorrect;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalResult {
  double acc_at_k = 0.0;    // mean per-sample correctness
  double pass_at_k = 0.0;   // any-of-k correctness
  double mean_entropy = 0.0;
  double mean_len = 0.0;
};

struct EvalDetail {
  EvalResult summary;
  // correct[i][j]: sample j of instance i verified correct.
  std::vector<std::vector<bool>> correct;
};

inline EvalDetail evaluate_detailed(const PolicyParams& params, const Dataset& dataset,
                                    int k, int max_len, double temperature, double top_p,
                                    std::uint64_t seed) {
  if (k < 1) throw ContractViolation("eval k must be >= 1");
  if (dataset.instances.empty()) throw ContractViolation("eval dataset is empty");

  EvalDetail detail;
  detail.correct.resize(dataset.size());
  double correct_samples = 0.0;
  double passed_instances = 0.0;
  double entropy_sum = 0.0;
  double len_sum = 0.0;
  std::int64_t token_count = 0;

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const TaskInstance& inst = dataset.instances[i];
    Rng rng(derive_seed(seed, {seed_stream::eval, i}));
    bool any = false;
    detail.correct[i].resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      const Response resp =
          sample_response(params, inst.prompt, max_len, temperature, top_p, rng);
      const bool ok = verify(inst, resp) > 0.0;
      detail.correct[i][static_cast<std::size_t>(j)] = ok;
      if (ok) {
        correct_samples += 1.0;
        any = true;
      }
      for (double h : resp.entropies) entropy_sum += h;
      token_count += static_cast<std::int64_t>(resp.tokens.size());
      len_sum += static_cast<double>(resp.tokens.size());
    }
    if (any) passed_instances += 1.0;
  }

  const double total_samples = static_cast<double>(dataset.size()) * k;
  detail.summary.acc_at_k = correct_samples / total_samples;
  detail.summary.pass_at_k = passed_instances / static_cast<double>(dataset.size());
  detail.summary.mean_entropy = token_count > 0 ? entropy_sum / static_cast<double>(token_count) : 0.0;
  detail.summary.mean_len = len_sum / total_samples;
  return detail;
}

inline EvalResult evaluate(const PolicyParams& params, const Dataset& dataset, int k,
                           int max_len, double temperature, double top_p,
                           std::uint64_t seed) {
  return evaluate_detailed(params, dataset, k, max_len, temperature, top_p, seed).summary;
}

// ---------------------------------------------------------------------------
// Dataset text format: one instance per line,
//   prompt_id <TAB> tier <TAB> prompt tokens <TAB> answer tokens
// with a two-line header carrying the generating spec.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string join_tokens(std::span<const TokenId> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(tokens[i]);
  }
  return out;
}

inline std::vector<TokenId> parse_tokens(const std::string& field) {
  std::vector<TokenId> out;
  std::istringstream ss(field);
  long v = 0;
  while (ss >> v) out.push_back(static_cast<TokenId>(v));
  if (!ss.eof()) throw ConfigError("malformed token list: " + field);
  return out;
}

}  // namespace detail

inline std::string dump_dataset(const Dataset& dataset) {
  std::string out = "# zvp dataset v1\n";
  out += "# family=" + std::string(to_string(dataset.spec.family)) +
         " modulus=" + std::to_string(dataset.spec.modulus) +
         " seq_len=" + std::to_string(dataset.spec.seq_len) +
         " chain_depth=" + std::to_string(dataset.spec.chain_depth) +
         " vocab_size=" + std::to_string(dataset.vocab_size) + "\n";
  for (const TaskInstance& inst : dataset.instances) {
    out += std::to_string(inst.prompt.prompt_id);
    out.push_back('\t');
    out += to_string(inst.prompt.tier);
    out.push_back('\t');
    out += detail::join_tokens(inst.prompt.tokens);
    out.push_back('\t');
    out += detail::join_tokens(inst.answer_key);
    out.push_back('\n');
  }
  return out;
}

inline Dataset parse_dataset(const std::string& text) {
  Dataset out;
  std::istringstream in(text);
  std::string line;
  bool saw_version = false;
  std::vector<std::int64_t> seen_ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# zvp dataset v1", 0) == 0) saw_version = true;
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "family") out.spec.family = task_family_from_string(val);
        else if (key == "modulus") out.spec.modulus = std::stoi(val);
        else if (key == "seq_len") out.spec.seq_len = std::stoi(val);
        else if (key == "chain_depth") out.spec.chain_depth = std::stoi(val);
        else if (key == "vocab_size") out.vocab_size = std::stoi(val);
      }
      continue;
    }
    std::istringstream row(line);
    std::string id_field, tier_field, prompt_field, answer_field;
    if (!std::getline(row, id_field, '\t') || !std::getline(row, tier_field, '\t') ||
        !std::getline(row, prompt_field, '\t') || !std::getline(row, answer_field)) {
      throw ConfigError("malformed dataset row: " + line);
    }
    TaskInstance inst;
    inst.prompt.prompt_id = std::stoll(id_field);
    inst.prompt.tier = tier_from_string(tier_field);
    inst.prompt.tokens = detail::parse_tokens(prompt_field);
    inst.answer_key = detail::parse_tokens(answer_field);
    if (inst.prompt.tokens.empty() || inst.answer_key.empty()) {
      throw ConfigError("dataset row with empty prompt or answer: " + line);
    }
    PolicyDims probe;
    probe.vocab_size = out.vocab_size;
    if (inst.answer_key.back() != probe.eos_id()) {
      throw ConfigError("answer key must end with the eos token: " + line);
    }
    seen_ids.push_back(inst.prompt.prompt_id);
    out.instances.push_back(std::move(inst));
  }
  if (!saw_version) throw ConfigError("missing dataset version header");
  std::sort(seen_ids.begin(), seen_ids.end());
  if (std::adjacent_find(seen_ids.begin(), seen_ids.end()) != seen_ids.end()) {
    throw ConfigError("duplicate prompt ids in dataset");
  }
  return out;
}

inline void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open dataset file for writing: " + path);
  out << dump_dataset(dataset);
  if (!out) throw ConfigError("failed writing dataset: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_dataset(text);
}

}  // namespace zvp
