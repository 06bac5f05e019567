#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abon/adaptive.hpp"
#include "abon/pruner.hpp"
#include "abon/workload.hpp"

namespace abon::experiment {

/// 100 * (q - q_one) / (q_max - q_one).
/// Throws UndefinedBaselineError when q_max == q_one.
double percent_of_max_improvement(double q, double q_one, double q_max);

/// One sampling strategy of the evaluation grid.
struct StrategySpec {
  enum class Kind { fixed, adaptive, adaptive_reward_stop, prune };
  Kind kind = Kind::fixed;
  int n = 16;  // fixed N, adaptive n_max, or prune n_initial
  double tau = 1.0;
  bool annealing = true;
  double reward_threshold = 0.0;  // adaptive_reward_stop only
  int prune_at = 128;
  double prune_fraction = 0.75;

  std::string label() const;

  static StrategySpec make_fixed(int n);
  static StrategySpec make_adaptive(double tau, int n_max,
                                    bool annealing = true);
  static StrategySpec make_reward_stop(double threshold, int n_max,
                                       bool annealing = true);
  static StrategySpec make_prune(int n, int prune_at, double fraction);
};

/// Per-strategy metrics, averaged over the workload's prompts.
struct MetricRow {
  std::string strategy;
  double avg_samples = 0.0;
  double avg_batches = 0.0;
  double avg_tokens = 0.0;
  double avg_pruned = 0.0;
  double mean_reward = 0.0;   // mean selected latent reward
  double success_rate = 0.0;  // fraction with reward >= success threshold
  std::optional<double> pct_max_improvement;  // vs fixed-1 / fixed-N_max
};

struct GridOptions {
  int jobs = 1;
  double success_threshold = 1.0;
  int max_tokens = 1 << 20;
  std::filesystem::path out_dir;  // empty disables file output
};

struct GridResult {
  std::vector<MetricRow> rows;
  // Raw per-(strategy, prompt) stats in row-major prompt order, for audit.
  std::vector<std::string> strategy_labels;
  std::vector<std::vector<adaptive::RunStats>> per_prompt;
};

/// Runs every strategy over the workload, prompts in parallel across
/// `jobs` workers with order-independent aggregation. Fixed best-of-
/// {1,2,4,8,16} baselines are always prepended; percent of maximum
/// improvement is measured against the fixed-1 and widest fixed rows.
/// Writes metrics.csv and per_prompt.jsonl when out_dir is set; the
/// computed result is complete before any write starts, so callers that
/// catch the IoError still hold every row.
GridResult run_grid(const Workload& workload,
                    std::vector<StrategySpec> strategies,
                    const GridOptions& options);

/// Writes metrics.csv and per_prompt.jsonl under out_dir. Throws IoError
/// on failure; the result object is never modified.
void write_grid_outputs(const GridResult& result,
                        const std::filesystem::path& out_dir);

/// Fixed best-of-N: n samples at temperature 1.0 in one batch, selection
/// by ranked self-evaluation score.
adaptive::RunStats run_fixed(const PromptSpec& prompt, Generator& gen, int n,
                             int workers = 1);

/// Averages per-prompt stats into one metric row. Reward columns become
/// NaN when the backend exposes no latent rewards (remote runs).
MetricRow aggregate_metrics(const std::string& label,
                            std::span<const adaptive::RunStats> stats,
                            double success_threshold);

struct SelectorRow {
  std::string selector;
  double mean_reward = 0.0;
  std::vector<double> rewards;  // per prompt, for paired comparisons
};

/// Selection-rule comparison on a shared sample set: uniform random pick,
/// noisy self-evaluation argmax, and exact-score (oracle) argmax.
std::vector<SelectorRow> compare_selectors(const Workload& workload,
                                           int n_samples, int jobs = 1);

/// Stable, versioned CSV rendering of metric rows.
std::string metrics_csv(std::span<const MetricRow> rows);

inline constexpr std::string_view kMetricsSchemaLine = "# abon metrics schema 1";

}  // namespace abon::experiment
