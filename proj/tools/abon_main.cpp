// abon: adaptive best-of-N sampling engine.
//
// Subcommands cover the simulated evaluation protocol (simulate, fixed,
// adaptive, prune, grid), preference-dataset construction (build-dataset),
// and running the same strategies against a live completions endpoint
// (remote-eval).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "abon/dataset.hpp"
#include "abon/errors.hpp"
#include "abon/experiment.hpp"
#include "abon/parallel.hpp"
#include "abon/remote_backend.hpp"
#include "abon/version.hpp"
#include "abon/workload.hpp"

namespace {

namespace fs = std::filesystem;
using abon::experiment::StrategySpec;

struct GlobalOptions {
  std::uint64_t seed = 17;
  fs::path out_dir = "out";
  int jobs = 1;
};

struct WorkloadFlags {
  std::size_t prompts = 1000;
  std::string workload_file;
  std::string mode = "noisy";
  int full_length = 192;
  double length_sigma = 0.0;
  double mid_noise_scale = 1.25;
  double eval_noise_sigma = 0.5;
  double saturated_fraction = 0.40;
};

void add_workload_flags(CLI::App* cmd, WorkloadFlags& flags) {
  cmd->add_option("--prompts", flags.prompts, "Number of simulated prompts");
  cmd->add_option("--workload", flags.workload_file,
                  "Load worlds from a JSONL file instead of generating");
  cmd->add_option("--mode", flags.mode, "Calibration mode: exact or noisy")
      ->check(CLI::IsMember({"exact", "noisy"}));
  cmd->add_option("--full-length", flags.full_length,
                  "Tokens of a complete simulated response");
  cmd->add_option("--length-sigma", flags.length_sigma,
                  "Std of per-sample response lengths (0 = constant)");
  cmd->add_option("--mid-noise-scale", flags.mid_noise_scale,
                  "Mid-generation observation noise, relative to sigma");
  cmd->add_option("--eval-noise-sigma", flags.eval_noise_sigma,
                  "Logit perturbation std for noisy self-evaluations");
  cmd->add_option("--saturated-fraction", flags.saturated_fraction,
                  "Share of prompts whose greedy response is near-optimal");
}

abon::Workload make_workload(const GlobalOptions& global,
                             const WorkloadFlags& flags) {
  if (!flags.workload_file.empty()) {
    abon::Workload loaded;
    loaded.worlds = abon::load_workload_jsonl(flags.workload_file);
    loaded.config.seed = global.seed;
    loaded.config.n_prompts = loaded.worlds.size();
    return loaded;
  }
  abon::WorkloadConfig config;
  config.n_prompts = flags.prompts;
  config.seed = global.seed;
  config.mode = flags.mode == "exact" ? abon::CalibrationMode::exact
                                      : abon::CalibrationMode::noisy;
  config.full_length = flags.full_length;
  config.length_sigma = flags.length_sigma;
  config.mid_noise_scale = flags.mid_noise_scale;
  config.eval_noise_sigma = flags.eval_noise_sigma;
  config.saturated_fraction = flags.saturated_fraction;
  return abon::generate_workload(config);
}

int run_strategies(const GlobalOptions& global, const WorkloadFlags& flags,
                   std::vector<StrategySpec> strategies,
                   double success_threshold) {
  const auto workload = make_workload(global, flags);
  abon::experiment::GridOptions options;
  options.jobs = global.jobs;
  options.success_threshold = success_threshold;
  const auto result =
      abon::experiment::run_grid(workload, std::move(strategies), options);
  // Rows reach stdout before any file I/O, so a failed write never costs
  // the computed results.
  std::cout << abon::experiment::metrics_csv(result.rows);
  abon::experiment::write_grid_outputs(result, global.out_dir);
  std::cerr << "wrote " << (global.out_dir / "metrics.csv").string() << " and "
            << (global.out_dir / "per_prompt.jsonl").string() << "\n";
  return 0;
}

std::vector<std::string> read_prompt_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw abon::IoError("cannot open prompts file " + path.string());
  std::vector<std::string> prompts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) prompts.push_back(line);
  }
  if (prompts.empty()) {
    throw abon::IoError("prompts file is empty: " + path.string());
  }
  return prompts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abon: adaptive best-of-N sampling engine"};
  app.set_version_flag("--version", ABON_VERSION);
  app.set_config("--config", "", "Read options from a key=value file");
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Global random seed")
      ->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "Output directory")
      ->capture_default_str();
  app.add_option("--jobs", global.jobs, "Worker threads across prompts")
      ->capture_default_str();

  // --- simulate ---
  auto* simulate = app.add_subcommand(
      "simulate", "Generate a simulated workload (and optional pairs)");
  WorkloadFlags sim_flags;
  add_workload_flags(simulate, sim_flags);
  std::size_t emit_pairs = 0;
  simulate->add_option("--emit-pairs", emit_pairs,
                       "Also emit this many synthetic preference pairs");
  double pair_sigma = 1.0;
  simulate->add_option("--pair-sigma", pair_sigma,
                       "Reward spread of synthetic pairs");
  double pair_epsilon = 0.7424;
  simulate->add_option("--pair-epsilon", pair_epsilon,
                       "Tie threshold used to label synthetic pairs");

  // --- fixed ---
  auto* fixed = app.add_subcommand("fixed", "Fixed best-of-N baseline");
  WorkloadFlags fixed_flags;
  add_workload_flags(fixed, fixed_flags);
  int fixed_n = 16;
  fixed->add_option("--n", fixed_n, "Samples per prompt");
  double fixed_success = 1.0;
  fixed->add_option("--success-threshold", fixed_success,
                    "Reward level counted as success");

  // --- adaptive ---
  auto* adaptive_cmd =
      app.add_subcommand("adaptive", "Adaptive sampling with annealing");
  WorkloadFlags adaptive_flags;
  add_workload_flags(adaptive_cmd, adaptive_flags);
  double tau = 0.98;
  int n_max = 16;
  bool no_annealing = false;
  double adaptive_success = 1.0;
  adaptive_cmd->add_option("--tau", tau, "Stop threshold on the score");
  adaptive_cmd->add_option("--n-max", n_max, "Maximum samples per prompt");
  adaptive_cmd->add_flag("--no-annealing", no_annealing,
                         "Disable the temperature annealing schedule");
  adaptive_cmd->add_option("--success-threshold", adaptive_success,
                           "Reward level counted as success");

  // --- prune ---
  auto* prune_cmd =
      app.add_subcommand("prune", "Parallel best-of-N with early pruning");
  WorkloadFlags prune_flags;
  add_workload_flags(prune_cmd, prune_flags);
  int prune_n = 16;
  int prune_at = 128;
  double prune_frac = 0.75;
  double prune_success = 1.0;
  prune_cmd->add_option("--n", prune_n, "Initial samples per prompt");
  prune_cmd->add_option("--prune-at", prune_at,
                        "Tokens generated before the pruning decision");
  prune_cmd->add_option("--prune-frac", prune_frac,
                        "Fraction of samples stopped at the barrier");
  prune_cmd->add_option("--success-threshold", prune_success,
                        "Reward level counted as success");

  // --- grid ---
  auto* grid = app.add_subcommand(
      "grid", "Adaptive tau sweep plus pruning grid with fixed baselines");
  WorkloadFlags grid_flags;
  add_workload_flags(grid, grid_flags);
  std::vector<double> grid_taus = {0.92, 0.96, 0.98, 0.99, 1.00};
  grid->add_option("--taus", grid_taus, "Adaptive thresholds to sweep");
  std::vector<int> grid_prune_at = {0, 64, 128};
  grid->add_option("--prune-at", grid_prune_at, "Pruning barriers to sweep");
  double grid_prune_frac = 0.75;
  grid->add_option("--prune-frac", grid_prune_frac, "Pruning fraction");
  double grid_success = 1.0;
  grid->add_option("--success-threshold", grid_success,
                   "Reward level counted as success");

  // --- build-dataset ---
  auto* build = app.add_subcommand(
      "build-dataset", "Emit the self-evaluation SFT dataset from pairs");
  std::string pairs_file;
  build->add_option("--pairs", pairs_file, "Input pairs JSONL")->required();
  double epsilon = 0.01;
  build->add_option("--epsilon", epsilon, "Tie threshold on reward gaps");
  bool truncate = false;
  build->add_flag("--truncate", truncate,
                  "Also emit one truncated variant per response");
  std::string dataset_out = "dataset.jsonl";
  build->add_option("--out", dataset_out, "Output JSONL path");
  std::string unit = "chars";
  build->add_option("--unit", unit, "Truncation granularity")
      ->check(CLI::IsMember({"chars", "tokens"}));
  std::string score_endpoint;
  build->add_option("--score-endpoint", score_endpoint,
                    "Rescore responses through this completions endpoint "
                    "before labeling");
  std::string score_model;
  build->add_option("--score-model", score_model,
                    "Model name for --score-endpoint");
  std::string score_api_key;
  build->add_option("--score-api-key", score_api_key,
                    "Bearer token for --score-endpoint");

  // --- remote-eval ---
  auto* remote = app.add_subcommand(
      "remote-eval", "Run a strategy against a live completions endpoint");
  std::string endpoint;
  remote->add_option("--endpoint", endpoint, "Base URL of the server")
      ->required();
  std::string model;
  remote->add_option("--model", model, "Model name")->required();
  std::string prompts_file;
  remote->add_option("--prompts-file", prompts_file,
                     "Text file with one prompt per line")
      ->required();
  std::string api_key;
  remote->add_option("--api-key", api_key, "Bearer token");
  std::string strategy_name = "adaptive";
  remote->add_option("--strategy", strategy_name, "fixed, adaptive, or prune")
      ->check(CLI::IsMember({"fixed", "adaptive", "prune"}));
  double remote_tau = 0.98;
  remote->add_option("--tau", remote_tau, "Adaptive stop threshold");
  int remote_n = 16;
  remote->add_option("--n", remote_n, "Samples per prompt");
  int remote_prune_at = 128;
  remote->add_option("--prune-at", remote_prune_at, "Pruning barrier");
  double remote_prune_frac = 0.75;
  remote->add_option("--prune-frac", remote_prune_frac, "Pruning fraction");
  int remote_max_tokens = 1024;
  remote->add_option("--max-tokens", remote_max_tokens,
                     "Per-sample generation cap");
  int logprobs_depth = 20;
  remote->add_option("--logprobs-depth", logprobs_depth,
                     "Top log-probabilities requested for scoring");
  double temperature_floor = 0.0;
  remote->add_option("--temperature-floor", temperature_floor,
                     "Minimum temperature sent to the server");
  std::string eval_style = "raw";
  remote->add_option("--eval-style", eval_style,
                     "Self-eval prompt insertion: raw or chat")
      ->check(CLI::IsMember({"raw", "chat"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const auto workload = make_workload(global, sim_flags);
      fs::create_directories(global.out_dir);
      const auto workload_path = global.out_dir / "workload.jsonl";
      abon::save_workload_jsonl(workload, workload_path);
      std::cerr << "wrote " << workload_path.string() << " ("
                << workload.worlds.size() << " prompts)\n";
      if (emit_pairs > 0) {
        const auto pairs = abon::dataset::generate_synthetic_pairs(
            emit_pairs, global.seed, 0.0, pair_sigma, pair_epsilon);
        const auto pairs_path = global.out_dir / "pairs.jsonl";
        abon::dataset::save_pairs_jsonl(pairs, pairs_path);
        std::cerr << "wrote " << pairs_path.string() << " (" << pairs.size()
                  << " pairs, tie rate " << abon::dataset::tie_rate(pairs)
                  << ")\n";
      }
      return 0;
    }

    if (fixed->parsed()) {
      return run_strategies(global, fixed_flags,
                            {StrategySpec::make_fixed(fixed_n)}, fixed_success);
    }

    if (adaptive_cmd->parsed()) {
      return run_strategies(
          global, adaptive_flags,
          {StrategySpec::make_adaptive(tau, n_max, !no_annealing)},
          adaptive_success);
    }

    if (prune_cmd->parsed()) {
      return run_strategies(
          global, prune_flags,
          {StrategySpec::make_prune(prune_n, prune_at, prune_frac)},
          prune_success);
    }

    if (grid->parsed()) {
      std::vector<StrategySpec> strategies;
      for (double t : grid_taus) {
        strategies.push_back(StrategySpec::make_adaptive(t, 16));
      }
      for (int at : grid_prune_at) {
        strategies.push_back(StrategySpec::make_prune(16, at, grid_prune_frac));
      }
      return run_strategies(global, grid_flags, std::move(strategies),
                            grid_success);
    }

    if (build->parsed()) {
      auto pairs = abon::dataset::load_pairs_jsonl(pairs_file);
      if (!score_endpoint.empty()) {
        abon::RemoteConfig score_config;
        score_config.base_url = score_endpoint;
        score_config.model = score_model;
        score_config.api_key = score_api_key;
        abon::RemoteBackend scorer(score_config);
        abon::dataset::score_pairs(pairs, scorer, global.jobs);
      }
      for (auto& p : pairs) {
        p.label = abon::dataset::label_pair(p.reward_1, p.reward_2, epsilon);
      }
      abon::dataset::BuildOptions options;
      options.truncate = truncate;
      options.unit = unit == "tokens" ? abon::dataset::TruncationUnit::tokens
                                      : abon::dataset::TruncationUnit::chars;
      options.seed = global.seed;
      options.jobs = global.jobs;
      std::ofstream out(dataset_out, std::ios::binary);
      if (!out) throw abon::IoError("cannot open " + dataset_out);
      const auto stats = abon::dataset::build_dataset(pairs, options, out);
      std::cerr << "wrote " << dataset_out << ": " << stats.records
                << " records from " << stats.pairs << " pairs, tie rate "
                << abon::dataset::tie_rate(pairs) << ", skipped truncations "
                << stats.skipped_truncations << "\n";
      return 0;
    }

    if (remote->parsed()) {
      abon::RemoteConfig config;
      config.base_url = endpoint;
      config.model = model;
      config.api_key = api_key;
      config.logprobs_depth = logprobs_depth;
      config.temperature_floor = temperature_floor;
      config.eval_prompt_style = eval_style == "chat" ? abon::EvalPromptStyle::chat
                                                      : abon::EvalPromptStyle::raw;
      abon::RemoteBackend backend(config);

      const auto prompts = read_prompt_lines(prompts_file);
      std::vector<abon::adaptive::RunStats> stats(prompts.size());
      abon::parallel_for(prompts.size(), global.jobs, [&](std::size_t i) {
        abon::PromptSpec prompt;
        prompt.prompt_id = i;
        prompt.prompt_text = prompts[i];
        prompt.seed = global.seed;
        prompt.max_tokens = remote_max_tokens;
        if (strategy_name == "fixed") {
          stats[i] = abon::experiment::run_fixed(prompt, backend, remote_n,
                                                 remote_n);
        } else if (strategy_name == "prune") {
          stats[i] = abon::prune::run_pruned(
              prompt, backend,
              {remote_n, remote_prune_at, remote_prune_frac}, remote_n);
        } else {
          stats[i] = abon::adaptive::run_adaptive(
              prompt, backend, {remote_tau, remote_n, true}, remote_n);
        }
      });

      const std::string label = "remote-" + strategy_name;
      abon::experiment::GridResult result;
      result.strategy_labels = {label};
      result.rows = {abon::experiment::aggregate_metrics(label, stats, 0.0)};
      result.per_prompt = {stats};
      std::cout << abon::experiment::metrics_csv(result.rows);
      abon::experiment::write_grid_outputs(result, global.out_dir);

      // The selected texts are the actual product of a remote run.
      const auto selections_path = global.out_dir / "selections.jsonl";
      std::ofstream out(selections_path, std::ios::binary);
      if (!out) throw abon::IoError("cannot open " + selections_path.string());
      for (std::size_t i = 0; i < stats.size(); ++i) {
        nlohmann::json j;
        j["prompt_id"] = i;
        j["prompt"] = prompts[i];
        j["response"] = stats[i].selected.text;
        j["best_score"] = stats[i].best.score;
        j["samples_used"] = stats[i].samples_used;
        j["tokens_generated"] = stats[i].tokens_generated;
        out << j.dump() << '\n';
      }
      std::cerr << "wrote " << selections_path.string() << ", "
                << (global.out_dir / "metrics.csv").string() << ", "
                << (global.out_dir / "per_prompt.jsonl").string() << "\n";
      return 0;
    }
  } catch (const abon::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
