// zvp command line: train one run, execute multi-seed experiment presets,
// build comparison reports, and generate or dump datasets.
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zvp/harness.hpp"

namespace {

using namespace zvp;

// Every config key doubles as a long CLI flag; flags override file values.
struct ConfigCli {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (keys mirror flag names)");
    const json reference = config_to_json(TrainConfig{});
    for (const auto& [key, value] : reference.items()) {
      const std::string name = "--" + key;
      const std::string help = "override config key " + key + " (default " + value.dump() + ")";
      const std::string key_copy = key;
      cmd->add_option_function<std::string>(
          name, [this, key_copy](const std::string& v) { overrides[key_copy] = v; }, help);
    }
  }

  TrainConfig resolve() const {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file: " + config_path);
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + config_path + ": " + e.what());
      }
      if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    }
    for (const auto& [key, value] : overrides) apply_override(j, key, value);
    TrainConfig cfg = config_from_json(j);
    cfg.validate();
    return cfg;
  }
};

std::string default_output_root() {
  if (const char* env = std::getenv("ZVP_OUTPUT_ROOT"); env && *env) return env;
  return "out";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) {
        try {
          seeds.push_back(std::stoull(cur));
        } catch (const std::exception&) {
          throw ConfigError("bad seed value: " + cur);
        }
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

int cmd_train(const ConfigCli& cli, const std::string& out_dir, bool save_policy) {
  const TrainConfig cfg = cli.resolve();
  const fs::path dir(out_dir);
  const RunRecord rec = run_single(to_string(cfg.advantage.mode), cfg, dir, save_policy);
  std::cout << "run complete: method=" << rec.method << " seed=" << rec.seed
            << " acc_at_" << cfg.eval_k << "=" << format_double(rec.final_eval.acc_at_k)
            << " pass_at_" << cfg.eval_k << "=" << format_double(rec.final_eval.pass_at_k)
            << " rollouts=" << rec.accounting.rollouts_total
            << " grad_steps=" << rec.accounting.grad_steps_total << "\n";
  std::cout << "metrics: " << (dir / rec.metrics_csv).string() << "\n";
  return 0;
}

int cmd_experiment(const ConfigCli& cli, const std::string& preset_name,
                   const std::string& seed_list, const std::string& out_dir) {
  const TrainConfig base = cli.resolve();
  const PresetName preset = preset_from_string(preset_name);
  const std::vector<std::uint64_t> seeds = parse_seed_list(seed_list);
  const ExperimentOutput out = run_experiment(preset, base, seeds, fs::path(out_dir));
  std::cout << "experiment " << preset_name << " finished: " << out.runs.size()
            << " runs -> " << out.directory.string() << "\n";
  for (const RunRecord& r : out.runs) {
    std::cout << "  " << r.method << " seed=" << r.seed
              << " acc=" << format_double(r.final_eval.acc_at_k)
              << " pass=" << format_double(r.final_eval.pass_at_k)
              << " rollouts=" << r.accounting.rollouts_total << "\n";
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& summaries, const std::string& out_dir) {
  std::vector<fs::path> paths(summaries.begin(), summaries.end());
  const ComparisonReport report = compare_report(paths, fs::path(out_dir));
  std::cout << "method  n  mean_acc  mean_pass  d_acc  d_pass  wins\n";
  for (const ComparisonRow& r : report.rows) {
    std::cout << r.method << "  " << r.n_seeds << "  " << format_double(r.mean_acc) << "  "
              << format_double(r.mean_pass) << "  " << format_double(r.mean_delta_acc) << "  "
              << format_double(r.mean_delta_pass) << "  " << r.acc_wins << "\n";
  }
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

int cmd_dataset_generate(const ConfigCli& cli, int count, std::uint64_t seed,
                         const std::string& out_file) {
  const TrainConfig cfg = cli.resolve();
  const Dataset ds = generate_dataset(cfg.task, count, seed, cfg.dims.vocab_size);
  save_dataset(ds, out_file);
  std::cout << "wrote " << ds.size() << " instances to " << out_file << "\n";
  return 0;
}

int cmd_dataset_dump(const std::string& file) {
  const Dataset ds = load_dataset(file);
  std::cout << dump_dataset(ds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zvp: desk-scale RL training engine with entropy-guided advantages "
               "for zero-variance prompts"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "run one training configuration");
  ConfigCli train_cfg;
  train_cfg.attach(train);
  std::string train_out = default_output_root();
  bool save_policy = false;
  train->add_option("--out", train_out, "output directory");
  train->add_flag("--save-policy", save_policy, "write the final policy checkpoint");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a multi-seed preset");
  ConfigCli exp_cfg;
  exp_cfg.attach(experiment);
  std::string preset_name;
  std::string seed_list = "1,2,3,4,5";
  std::string exp_out = default_output_root();
  experiment->add_option("--preset", preset_name,
                         "one of: grpo, rl_zvp, grpo_ds_r, grpo_ds_g, greso_r, greso_g, "
                         "ablation_no_pos, ablation_no_neg, ablation_no_entropy, alpha_sweep")
      ->required();
  experiment->add_option("--seeds", seed_list, "comma-separated seed list");
  experiment->add_option("--out", exp_out, "output directory");

  // report
  auto* report = app.add_subcommand("report", "compare summaries against the grpo baseline");
  std::vector<std::string> summaries;
  std::string report_out = default_output_root();
  report->add_option("summaries", summaries, "summary.csv files (>= 2)")->required();
  report->add_option("--out", report_out, "output directory");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "generate or dump task datasets");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("generate", "generate a dataset file");
  ConfigCli gen_cfg;
  gen_cfg.attach(gen);
  int gen_count = 256;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--count", gen_count, "number of instances");
  gen->add_option("--data-seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output file")->required();
  auto* dump = dataset->add_subcommand("dump", "print a dataset file");
  std::string dump_file;
  dump->add_option("file", dump_file, "dataset file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_cfg, train_out, save_policy);
    if (experiment->parsed()) return cmd_experiment(exp_cfg, preset_name, seed_list, exp_out);
    if (report->parsed()) return cmd_report(summaries, report_out);
    if (dataset->parsed()) {
      if (gen->parsed()) return cmd_dataset_generate(gen_cfg, gen_count, gen_seed, gen_out);
      if (dump->parsed()) return cmd_dataset_dump(dump_file);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
