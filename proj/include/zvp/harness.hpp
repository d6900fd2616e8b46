#pragma once

// Experiment presets and report assembly. A preset names a method roster
// (training mode + selection strategy + budget rule), runs it over a seed
// list, and exports per-run metrics CSVs, a summary CSV with per-method
// mean/stdev of the final scores, the rollout/step accounting table and one
// machine-readable manifest per run. Reports compare summaries against the
// grpo baseline with per-seed paired deltas.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zvp/config_io.hpp"
#include "zvp/trainer.hpp"

namespace zvp {

inline constexpr const char* kArtifactVersion = "1.0.0";

namespace fs = std::filesystem;

enum class PresetName {
  grpo,
  rl_zvp,
  grpo_ds_r,
  grpo_ds_g,
  greso_r,
  greso_g,
  ablation_no_pos,
  ablation_no_neg,
  ablation_no_entropy,
  alpha_sweep,
};

inline const char* to_string(PresetName p) {
  switch (p) {
    case PresetName::grpo: return "grpo";
    case PresetName::rl_zvp: return "rl_zvp";
    case PresetName::grpo_ds_r: return "grpo_ds_r";
    case PresetName::grpo_ds_g: return "grpo_ds_g";
    case PresetName::greso_r: return "greso_r";
    case PresetName::greso_g: return "greso_g";
    case PresetName::ablation_no_pos: return "ablation_no_pos";
    case PresetName::ablation_no_neg: return "ablation_no_neg";
    case PresetName::ablation_no_entropy: return "ablation_no_entropy";
    case PresetName::alpha_sweep: return "alpha_sweep";
  }
  return "grpo";
}

inline PresetName preset_from_string(const std::string& s) {
  for (PresetName p : {PresetName::grpo, PresetName::rl_zvp, PresetName::grpo_ds_r,
                       PresetName::grpo_ds_g, PresetName::greso_r, PresetName::greso_g,
                       PresetName::ablation_no_pos, PresetName::ablation_no_neg,
                       PresetName::ablation_no_entropy, PresetName::alpha_sweep}) {
    if (s == to_string(p)) return p;
  }
  throw ConfigError("unknown preset: " + s);
}

struct MethodConfig {
  std::string method;
  TrainConfig config;
};

// The preset roster. Baselines inherit everything from the base config and
// change only the trained mode, the selection strategy and the stop budget.
inline std::vector<MethodConfig> resolve_preset(PresetName preset, const TrainConfig& base) {
  auto with = [&](const char* method, AdvantageMode mode, SelectionStrategy strategy,
                  BudgetMode budget) {
    MethodConfig mc{method, base};
    mc.config.advantage.mode = mode;
    mc.config.selection.strategy = strategy;
    mc.config.selection.budget_mode = budget;
    return mc;
  };
  switch (preset) {
    case PresetName::grpo:
      return {with("grpo", AdvantageMode::grpo, SelectionStrategy::passthrough,
                   BudgetMode::match_grad_steps)};
    case PresetName::rl_zvp:
      return {with("rl_zvp", AdvantageMode::rl_zvp, SelectionStrategy::passthrough,
                   BudgetMode::match_grad_steps)};
    case PresetName::grpo_ds_r:
      return {with("grpo_ds_r", AdvantageMode::grpo, SelectionStrategy::dynamic_sampling,
                   BudgetMode::match_rollouts)};
    case PresetName::grpo_ds_g:
      return {with("grpo_ds_g", AdvantageMode::grpo, SelectionStrategy::dynamic_sampling,
                   BudgetMode::match_grad_steps)};
    case PresetName::greso_r:
      return {with("greso_r", AdvantageMode::grpo, SelectionStrategy::probabilistic_filter,
                   BudgetMode::match_rollouts)};
    case PresetName::greso_g:
      return {with("greso_g", AdvantageMode::grpo, SelectionStrategy::probabilistic_filter,
                   BudgetMode::match_grad_steps)};
    case PresetName::ablation_no_pos:
      return {with("ablation_no_pos", AdvantageMode::zvp_no_positive,
                   SelectionStrategy::passthrough, BudgetMode::match_grad_steps)};
    case PresetName::ablation_no_neg:
      return {with("ablation_no_neg", AdvantageMode::zvp_no_negative,
                   SelectionStrategy::passthrough, BudgetMode::match_grad_steps)};
    case PresetName::ablation_no_entropy:
      return {with("ablation_no_entropy", AdvantageMode::zvp_no_entropy_scaling,
                   SelectionStrategy::passthrough, BudgetMode::match_grad_steps)};
    case PresetName::alpha_sweep: {
      std::vector<MethodConfig> out;
      for (double alpha : {0.05, 0.10, 0.20, 0.30}) {
        char label[32];
        std::snprintf(label, sizeof label, "rl_zvp_alpha_%.2f", alpha);
        MethodConfig mc = with(label, AdvantageMode::rl_zvp, SelectionStrategy::passthrough,
                               BudgetMode::match_grad_steps);
        mc.config.advantage.alpha = alpha;
        mc.method = label;
        out.push_back(std::move(mc));
      }
      return out;
    }
  }
  throw ConfigError("unreachable preset");
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline constexpr const char* kMetricsHeader =
    "step,iteration,acc_at_8,pass_at_8,mean_entropy,mean_len,zv_fraction,"
    "rollouts_total,grad_steps_total,lr";

inline std::string metrics_to_csv(std::span<const RunMetrics> rows) {
  std::string out = kMetricsHeader;
  out.push_back('\n');
  for (const RunMetrics& m : rows) {
    out += std::to_string(m.step) + "," + std::to_string(m.iteration) + "," +
           format_double(m.acc_at_k) + "," + format_double(m.pass_at_k) + "," +
           format_double(m.mean_entropy) + "," + format_double(m.mean_response_len) + "," +
           format_double(m.zv_fraction) + "," + std::to_string(m.rollouts_total) + "," +
           std::to_string(m.grad_steps_total) + "," + format_double(m.lr) + "\n";
  }
  return out;
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("failed writing: " + path.string());
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  EvalResult final_eval;
  RolloutAccounting accounting;
  std::string metrics_csv;  // relative to the summary directory
};

struct ExperimentOutput {
  fs::path directory;
  std::vector<RunRecord> runs;
};

namespace detail {

inline RunRecord execute_run(const MethodConfig& mc, std::uint64_t seed, const fs::path& dir,
                             bool save_policy = false) {
  TrainConfig cfg = mc.config;
  cfg.seed = seed;
  cfg.validate();
  const Dataset train = generate_dataset(
      cfg.task, cfg.train_size, derive_seed(cfg.seed, {seed_stream::dataset}), cfg.dims.vocab_size);
  const Dataset eval_set =
      generate_dataset(cfg.task, cfg.eval_size, derive_seed(cfg.seed, {seed_stream::eval_dataset}),
                       cfg.dims.vocab_size);
  PolicyParams policy = PolicyParams::random_init(cfg.dims, cfg.seed);
  const TrainResult result = run_training(cfg, train, eval_set, std::move(policy));

  RunRecord rec;
  rec.method = mc.method;
  rec.seed = seed;
  rec.final_eval = result.final_eval;
  rec.accounting = result.accounting;
  rec.metrics_csv = "metrics_" + mc.method + "_seed" + std::to_string(seed) + ".csv";
  write_file(dir / rec.metrics_csv, metrics_to_csv(result.metrics));

  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["method"] = mc.method;
  manifest["seed"] = seed;
  manifest["config"] = config_to_json(cfg);
  manifest["outputs"]["metrics_csv"] = rec.metrics_csv;
  if (save_policy) {
    const std::string ckpt = "policy_" + mc.method + "_seed" + std::to_string(seed) + ".bin";
    save_checkpoint(result.policy, (dir / ckpt).string());
    manifest["outputs"]["policy_checkpoint"] = ckpt;
  }
  write_file(dir / ("manifest_" + mc.method + "_seed" + std::to_string(seed) + ".json"),
             manifest.dump(2) + "\n");
  return rec;
}

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double stdev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double sq = 0.0;
  for (double x : xs) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

inline constexpr const char* kSummaryHeader =
    "method,seed,final_acc_at_8,final_pass_at_8,rollouts_total,grad_steps_total,metrics_csv";

inline std::string summary_to_csv(const std::vector<RunRecord>& runs) {
  std::string out = kSummaryHeader;
  out.push_back('\n');
  std::vector<std::string> methods;
  for (const RunRecord& r : runs) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
    out += r.method + "," + std::to_string(r.seed) + "," + format_double(r.final_eval.acc_at_k) +
           "," + format_double(r.final_eval.pass_at_k) + "," +
           std::to_string(r.accounting.rollouts_total) + "," +
           std::to_string(r.accounting.grad_steps_total) + "," + r.metrics_csv + "\n";
  }
  for (const std::string& method : methods) {
    std::vector<double> acc, pass;
    for (const RunRecord& r : runs) {
      if (r.method == method) {
        acc.push_back(r.final_eval.acc_at_k);
        pass.push_back(r.final_eval.pass_at_k);
      }
    }
    out += method + ",mean," + format_double(detail::mean_of(acc)) + "," +
           format_double(detail::mean_of(pass)) + ",,,\n";
    out += method + ",stdev," + format_double(detail::stdev_of(acc)) + "," +
           format_double(detail::stdev_of(pass)) + ",,,\n";
  }
  return out;
}

inline std::string accounting_to_csv(const std::vector<RunRecord>& runs,
                                     std::int64_t passthrough_rollouts) {
  std::string out = "method,seed,rollouts_total,grad_steps_total,rollout_multiplier\n";
  for (const RunRecord& r : runs) {
    const AccountingRow row = make_accounting_row(r.method, r.accounting, passthrough_rollouts);
    out += r.method + "," + std::to_string(r.seed) + "," + std::to_string(row.rollouts_total) +
           "," + std::to_string(row.grad_steps_total) + "," +
           format_double(row.rollout_multiplier) + "\n";
  }
  return out;
}

// One run outside any preset: used by the `train` CLI verb.
inline RunRecord run_single(const std::string& method, const TrainConfig& config,
                            const fs::path& dir, bool save_policy = false) {
  fs::create_directories(dir);
  return detail::execute_run(MethodConfig{method, config}, config.seed, dir, save_policy);
}

// Runs every (method, seed) pair of the preset, writing artifacts as each run
// finishes so that a failed run leaves the completed ones on disk. Seeds run
// in parallel; outputs are deterministic regardless of scheduling.
inline ExperimentOutput run_experiment(PresetName preset, const TrainConfig& base,
                                       const std::vector<std::uint64_t>& seeds,
                                       const fs::path& output_dir) {
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  const std::vector<MethodConfig> methods = resolve_preset(preset, base);
  const fs::path dir = output_dir / to_string(preset);
  fs::create_directories(dir);

  std::vector<std::future<RunRecord>> futures;
  for (const MethodConfig& mc : methods) {
    for (std::uint64_t seed : seeds) {
      futures.push_back(std::async(std::launch::async, [&mc, seed, &dir] {
        return detail::execute_run(mc, seed, dir);
      }));
    }
  }

  ExperimentOutput out;
  out.directory = dir;
  std::exception_ptr failure;
  for (auto& f : futures) {
    try {
      out.runs.push_back(f.get());
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  write_file(dir / "summary.csv", summary_to_csv(out.runs));
  write_file(dir / "accounting.csv", accounting_to_csv(out.runs, base.target_rollouts()));
  return out;
}

// ---------------------------------------------------------------------------
// Comparison report
// ---------------------------------------------------------------------------

struct SummaryEntry {
  std::string method;
  std::uint64_t seed = 0;
  double acc = 0.0;
  double pass = 0.0;
  fs::path metrics_csv;  // resolved
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

inline std::vector<SummaryEntry> read_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open summary file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw ConfigError("unrecognized summary header in " + path.string());
  }
  std::vector<SummaryEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) throw ConfigError("malformed summary row: " + line);
    if (fields[1] == "mean" || fields[1] == "stdev") continue;  // aggregate rows
    SummaryEntry e;
    e.method = fields[0];
    e.seed = std::stoull(fields[1]);
    e.acc = std::stod(fields[2]);
    e.pass = std::stod(fields[3]);
    if (!fields[6].empty()) e.metrics_csv = path.parent_path() / fields[6];
    out.push_back(std::move(e));
  }
  return out;
}

// step -> zv_fraction column from one metrics CSV.
inline std::vector<double> read_zv_column(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metrics file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ConfigError("unrecognized metrics header in " + path.string());
  }
  std::vector<double> zv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 10) throw ConfigError("malformed metrics row: " + line);
    zv.push_back(std::stod(fields[6]));
  }
  return zv;
}

}  // namespace detail

struct ComparisonRow {
  std::string method;
  int n_seeds = 0;
  double mean_acc = 0.0;
  double stdev_acc = 0.0;
  double mean_pass = 0.0;
  double stdev_pass = 0.0;
  double mean_delta_acc = 0.0;
  double mean_delta_pass = 0.0;
  int acc_wins = 0;
  int pass_wins = 0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  // deltas[method][seed] = (acc delta, pass delta) vs grpo
  std::map<std::string, std::map<std::uint64_t, std::pair<double, double>>> deltas;
};

// Builds the paired comparison against the grpo baseline and writes
// comparison.csv, deltas.csv and zv_curves.csv under output_dir. All input
// summaries must cover the same seed set.
inline ComparisonReport compare_report(const std::vector<fs::path>& summary_files,
                                       const fs::path& output_dir) {
  if (summary_files.size() < 2) {
    throw ConfigError("comparison needs at least two summary files");
  }
  std::vector<SummaryEntry> entries;
  for (const fs::path& p : summary_files) {
    const auto part = detail::read_summary(p);
    entries.insert(entries.end(), part.begin(), part.end());
  }

  std::map<std::string, std::map<std::uint64_t, SummaryEntry>> by_method;
  for (const SummaryEntry& e : entries) {
    const auto it = by_method[e.method].find(e.seed);
    if (it != by_method[e.method].end()) {
      // The same summary listed twice is idempotent; conflicting numbers for
      // one (method, seed) pair are not.
      if (it->second.acc != e.acc || it->second.pass != e.pass) {
        throw ConfigError("conflicting entries for " + e.method + "/" +
                          std::to_string(e.seed) + " across summaries");
      }
      continue;
    }
    by_method[e.method][e.seed] = e;
  }
  if (!by_method.count("grpo")) {
    throw ConfigError("comparison requires the grpo baseline among the summaries");
  }

  std::set<std::uint64_t> seeds;
  for (const auto& [seed, entry] : by_method.at("grpo")) {
    (void)entry;
    seeds.insert(seed);
  }
  for (const auto& [method, runs] : by_method) {
    std::set<std::uint64_t> have;
    for (const auto& [seed, entry] : runs) {
      (void)entry;
      have.insert(seed);
    }
    if (have != seeds) {
      throw ConfigError("seed sets differ between grpo and " + method +
                        "; refusing to pair the comparison");
    }
  }

  ComparisonReport report;
  const auto& baseline = by_method.at("grpo");
  for (const auto& [method, runs] : by_method) {
    ComparisonRow row;
    row.method = method;
    row.n_seeds = static_cast<int>(runs.size());
    std::vector<double> acc, pass, dacc, dpass;
    for (const auto& [seed, entry] : runs) {
      const SummaryEntry& base = baseline.at(seed);
      acc.push_back(entry.acc);
      pass.push_back(entry.pass);
      const double da = entry.acc - base.acc;
      const double dp = entry.pass - base.pass;
      dacc.push_back(da);
      dpass.push_back(dp);
      report.deltas[method][seed] = {da, dp};
      if (da > 0.0) row.acc_wins += 1;
      if (dp > 0.0) row.pass_wins += 1;
    }
    row.mean_acc = detail::mean_of(acc);
    row.stdev_acc = detail::stdev_of(acc);
    row.mean_pass = detail::mean_of(pass);
    row.stdev_pass = detail::stdev_of(pass);
    row.mean_delta_acc = detail::mean_of(dacc);
    row.mean_delta_pass = detail::mean_of(dpass);
    report.rows.push_back(std::move(row));
  }

  fs::create_directories(output_dir);
  std::string comparison =
      "method,n_seeds,mean_acc_at_8,stdev_acc_at_8,mean_pass_at_8,stdev_pass_at_8,"
      "mean_delta_acc_vs_grpo,mean_delta_pass_vs_grpo,acc_wins_vs_grpo,pass_wins_vs_grpo\n";
  for (const ComparisonRow& r : report.rows) {
    comparison += r.method + "," + std::to_string(r.n_seeds) + "," + format_double(r.mean_acc) +
                  "," + format_double(r.stdev_acc) + "," + format_double(r.mean_pass) + "," +
                  format_double(r.stdev_pass) + "," + format_double(r.mean_delta_acc) + "," +
                  format_double(r.mean_delta_pass) + "," + std::to_string(r.acc_wins) + "," +
                  std::to_string(r.pass_wins) + "\n";
  }
  write_file(output_dir / "comparison.csv", comparison);

  std::string deltas = "method,seed,delta_acc_at_8,delta_pass_at_8\n";
  for (const auto& [method, per_seed] : report.deltas) {
    for (const auto& [seed, d] : per_seed) {
      deltas += method + "," + std::to_string(seed) + "," + format_double(d.first) + "," +
                format_double(d.second) + "\n";
    }
  }
  write_file(output_dir / "deltas.csv", deltas);

  // Zero-variance fraction curves: per method, mean across seeds at each step.
  std::map<std::string, std::vector<std::vector<double>>> curves;
  std::size_t max_len = 0;
  for (const auto& [method, runs] : by_method) {
    for (const auto& [seed, entry] : runs) {
      (void)seed;
      if (entry.metrics_csv.empty()) {
        throw ConfigError("summary row for " + method + " lacks a metrics csv path");
      }
      curves[method].push_back(detail::read_zv_column(entry.metrics_csv));
      max_len = std::max(max_len, curves[method].back().size());
    }
  }
  std::string zv_csv = "step";
  for (const auto& [method, c] : curves) {
    (void)c;
    zv_csv += "," + method;
  }
  zv_csv.push_back('\n');
  for (std::size_t s = 0; s < max_len; ++s) {
    zv_csv += std::to_string(s + 1);
    for (const auto& [method, per_seed] : curves) {
      (void)method;
      double sum = 0.0;
      int n = 0;
      for (const auto& curve : per_seed) {
        if (s < curve.size()) {
          sum += curve[s];
          n += 1;
        }
      }
      zv_csv += ",";
      if (n > 0) zv_csv += format_double(sum / n);
    }
    zv_csv.push_back('\n');
  }
  write_file(output_dir / "zv_curves.csv", zv_csv);

  return report;
}

}  // namespace zvp
