#include "abon/experiment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "abon/errors.hpp"
#include "abon/parallel.hpp"
#include "abon/rng.hpp"

namespace abon::experiment {

using nlohmann::json;

double percent_of_max_improvement(double q, double q_one, double q_max) {
  if (q_max == q_one) {
    throw UndefinedBaselineError(
        "percent_of_max_improvement: q_max equals the 1-sample baseline");
  }
  // Ratio first: q == q_max must give exactly 100, q == q_one exactly 0.
  return 100.0 * ((q - q_one) / (q_max - q_one));
}

namespace {

// Shortest round-trip decimal rendering; keeps CSV bytes independent of
// locale and stream state.
std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::string StrategySpec::label() const {
  std::string out;
  switch (kind) {
    case Kind::fixed:
      out = "fixed-n" + std::to_string(n);
      break;
    case Kind::adaptive:
      out = "adaptive-tau" + fmt_double(tau) + "-n" + std::to_string(n);
      if (!annealing) out += "-noanneal";
      break;
    case Kind::adaptive_reward_stop:
      out = "reward-stop-r" + fmt_double(reward_threshold) + "-n" +
            std::to_string(n);
      if (!annealing) out += "-noanneal";
      break;
    case Kind::prune:
      out = "prune-n" + std::to_string(n) + "-at" + std::to_string(prune_at) +
            "-frac" + fmt_double(prune_fraction);
      break;
  }
  return out;
}

StrategySpec StrategySpec::make_fixed(int n) {
  StrategySpec s;
  s.kind = Kind::fixed;
  s.n = n;
  return s;
}

StrategySpec StrategySpec::make_adaptive(double tau, int n_max,
                                         bool annealing) {
  StrategySpec s;
  s.kind = Kind::adaptive;
  s.tau = tau;
  s.n = n_max;
  s.annealing = annealing;
  return s;
}

StrategySpec StrategySpec::make_reward_stop(double threshold, int n_max,
                                            bool annealing) {
  StrategySpec s;
  s.kind = Kind::adaptive_reward_stop;
  s.reward_threshold = threshold;
  s.n = n_max;
  s.annealing = annealing;
  return s;
}

StrategySpec StrategySpec::make_prune(int n, int prune_at, double fraction) {
  StrategySpec s;
  s.kind = Kind::prune;
  s.n = n;
  s.prune_at = prune_at;
  s.prune_fraction = fraction;
  return s;
}

adaptive::RunStats run_fixed(const PromptSpec& prompt, Generator& gen, int n,
                             int workers) {
  if (n < 1) throw MisuseError("run_fixed: n must be >= 1");

  GenerationRequest req;
  req.prompt_id = prompt.prompt_id;
  req.prompt_text = prompt.prompt_text;
  req.temperature = 1.0;
  req.token_budget = prompt.max_tokens;
  req.seed = prompt.seed;

  std::vector<Sample> samples(n);
  std::vector<scoring::EvalScore> scores(n);
  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
    Sample s = gen.start_generation(req, static_cast<int>(i));
    scores[i] = scoring::make_score({s.prompt_id, s.sample_index},
                                    s.tokens_generated, gen.self_evaluate(s));
    samples[i] = std::move(s);
  });

  adaptive::RunStats stats;
  stats.prompt_id = prompt.prompt_id;
  stats.samples_used = n;
  stats.batches_used = 1;
  stats.batch_sizes = {n};
  stats.all_scores = scores;
  for (const Sample& s : samples) {
    stats.sample_tokens.push_back(s.tokens_generated);
  }
  stats.tokens_generated = prune::tokens_accounting(samples);
  const auto ranked = scoring::rank(scores);
  stats.best = ranked.front();
  stats.selected =
      samples[static_cast<std::size_t>(stats.best.sample_ref.sample_index)];
  return stats;
}

namespace {

adaptive::RunStats run_strategy(const StrategySpec& spec,
                                const PromptSpec& prompt, Generator& gen) {
  switch (spec.kind) {
    case StrategySpec::Kind::fixed:
      return run_fixed(prompt, gen, spec.n);
    case StrategySpec::Kind::adaptive: {
      adaptive::AdaptivePolicy policy{spec.tau, spec.n, spec.annealing};
      return adaptive::run_adaptive(prompt, gen, policy);
    }
    case StrategySpec::Kind::adaptive_reward_stop: {
      adaptive::AdaptivePolicy policy{1.0, spec.n, spec.annealing};
      return adaptive::run_adaptive_reward_stop(prompt, gen, policy,
                                                spec.reward_threshold);
    }
    case StrategySpec::Kind::prune: {
      prune::PruneConfig cfg{spec.n, spec.prune_at, spec.prune_fraction};
      return prune::run_pruned(prompt, gen, cfg);
    }
  }
  throw MisuseError("run_strategy: unknown strategy kind");
}

}  // namespace

MetricRow aggregate_metrics(const std::string& label,
                            std::span<const adaptive::RunStats> stats,
                            double success_threshold) {
  MetricRow row;
  row.strategy = label;
  if (stats.empty()) return row;
  double samples = 0, batches = 0, tokens = 0, pruned = 0, reward = 0,
         success = 0;
  bool have_reward = true;
  for (const auto& s : stats) {
    samples += s.samples_used;
    batches += s.batches_used;
    tokens += static_cast<double>(s.tokens_generated);
    pruned += s.samples_pruned;
    if (s.selected.latent_reward.has_value()) {
      reward += *s.selected.latent_reward;
      success += *s.selected.latent_reward >= success_threshold ? 1.0 : 0.0;
    } else {
      have_reward = false;
    }
  }
  const double n = static_cast<double>(stats.size());
  row.avg_samples = samples / n;
  row.avg_batches = batches / n;
  row.avg_tokens = tokens / n;
  row.avg_pruned = pruned / n;
  row.mean_reward =
      have_reward ? reward / n : std::numeric_limits<double>::quiet_NaN();
  row.success_rate =
      have_reward ? success / n : std::numeric_limits<double>::quiet_NaN();
  return row;
}

namespace {

void write_per_prompt_jsonl(const GridResult& result,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("run_grid: cannot open " + path.string());
  for (std::size_t s = 0; s < result.per_prompt.size(); ++s) {
    for (const auto& st : result.per_prompt[s]) {
      json j;
      j["strategy"] = result.strategy_labels[s];
      j["prompt_id"] = st.prompt_id;
      j["samples_used"] = st.samples_used;
      j["batches_used"] = st.batches_used;
      j["tokens_generated"] = st.tokens_generated;
      j["samples_pruned"] = st.samples_pruned;
      j["stopped_early"] = st.stopped_early;
      j["best_index"] = st.best.sample_ref.sample_index;
      j["best_score"] = st.best.score;
      if (st.selected.latent_reward.has_value()) {
        j["selected_reward"] = *st.selected.latent_reward;
      } else {
        j["selected_reward"] = nullptr;
      }
      j["batch_sizes"] = st.batch_sizes;
      j["sample_tokens"] = st.sample_tokens;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw IoError("run_grid: write failed for " + path.string());
}

}  // namespace

GridResult run_grid(const Workload& workload,
                    std::vector<StrategySpec> strategies,
                    const GridOptions& options) {
  // Fixed best-of-N baselines always run first; they anchor the percent of
  // maximum improvement for every other row.
  std::vector<StrategySpec> all;
  for (int n : {1, 2, 4, 8, 16}) {
    all.push_back(StrategySpec::make_fixed(n));
  }
  for (auto& s : strategies) {
    const std::string label = s.label();
    const bool duplicate =
        std::any_of(all.begin(), all.end(), [&](const StrategySpec& other) {
          return other.label() == label;
        });
    if (!duplicate) all.push_back(std::move(s));
  }

  SimBackend backend(workload.worlds);
  const std::size_t n_prompts = workload.worlds.size();

  GridResult result;
  result.per_prompt.resize(all.size());
  for (std::size_t s = 0; s < all.size(); ++s) {
    result.strategy_labels.push_back(all[s].label());
    auto& stats = result.per_prompt[s];
    stats.resize(n_prompts);
    parallel_for(n_prompts, options.jobs, [&](std::size_t p) {
      PromptSpec prompt;
      prompt.prompt_id = workload.worlds[p].prompt_id;
      prompt.seed = workload.config.seed;
      prompt.max_tokens = options.max_tokens;
      stats[p] = run_strategy(all[s], prompt, backend);
    });
    result.rows.push_back(aggregate_metrics(result.strategy_labels[s], stats,
                                            options.success_threshold));
  }

  // Percent of maximum improvement against the fixed-1 and widest fixed rows.
  const double q_one = result.rows[0].mean_reward;
  const double q_max = result.rows[4].mean_reward;
  if (q_max != q_one && !std::isnan(q_one) && !std::isnan(q_max)) {
    for (auto& row : result.rows) {
      row.pct_max_improvement =
          percent_of_max_improvement(row.mean_reward, q_one, q_max);
    }
  }

  if (!options.out_dir.empty()) {
    write_grid_outputs(result, options.out_dir);
  }
  return result;
}

void write_grid_outputs(const GridResult& result,
                        const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("write_grid_outputs: cannot create " + out_dir.string() +
                  ": " + ec.message());
  }
  const auto csv_path = out_dir / "metrics.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) {
    throw IoError("write_grid_outputs: cannot open " + csv_path.string());
  }
  csv << metrics_csv(result.rows);
  if (!csv) {
    throw IoError("write_grid_outputs: write failed for " + csv_path.string());
  }
  write_per_prompt_jsonl(result, out_dir / "per_prompt.jsonl");
}

std::vector<SelectorRow> compare_selectors(const Workload& workload,
                                           int n_samples, int jobs) {
  if (n_samples < 1) {
    throw MisuseError("compare_selectors: n_samples must be >= 1");
  }

  auto exact_worlds = workload.worlds;
  for (auto& w : exact_worlds) w.calibration_mode = CalibrationMode::exact;
  auto noisy_worlds = workload.worlds;
  for (auto& w : noisy_worlds) w.calibration_mode = CalibrationMode::noisy;

  SimBackend exact(exact_worlds);
  SimBackend noisy(noisy_worlds);

  const std::size_t n_prompts = workload.worlds.size();
  std::vector<double> random_reward(n_prompts);
  std::vector<double> noisy_reward(n_prompts);
  std::vector<double> oracle_reward(n_prompts);

  parallel_for(n_prompts, jobs, [&](std::size_t p) {
    const PromptId id = workload.worlds[p].prompt_id;
    GenerationRequest req;
    req.prompt_id = id;
    req.temperature = 1.0;
    req.token_budget = 1 << 20;
    req.seed = workload.config.seed;

    std::vector<Sample> samples;
    std::vector<scoring::EvalScore> noisy_scores;
    std::vector<scoring::EvalScore> exact_scores;
    samples.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
      Sample s = exact.start_generation(req, i);
      noisy_scores.push_back(scoring::make_score(
          {id, i}, s.tokens_generated, noisy.self_evaluate(s)));
      exact_scores.push_back(scoring::make_score(
          {id, i}, s.tokens_generated, exact.self_evaluate(s)));
      samples.push_back(std::move(s));
    }

    rng::Stream pick{workload.config.seed, id, rng::purpose::kSelectorRandom};
    const auto random_index = static_cast<std::size_t>(
        pick.uniform_int(static_cast<std::uint64_t>(n_samples)));
    random_reward[p] = *samples[random_index].latent_reward;

    const auto best_noisy = scoring::rank(noisy_scores).front();
    noisy_reward[p] =
        *samples[static_cast<std::size_t>(best_noisy.sample_ref.sample_index)]
             .latent_reward;
    const auto best_exact = scoring::rank(exact_scores).front();
    oracle_reward[p] =
        *samples[static_cast<std::size_t>(best_exact.sample_ref.sample_index)]
             .latent_reward;
  });

  auto row = [](const char* name, std::vector<double> xs) {
    double s = 0;
    for (double x : xs) s += x;
    const double mean = xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
    return SelectorRow{name, mean, std::move(xs)};
  };
  return {row("random", std::move(random_reward)),
          row("noisy-self-eval", std::move(noisy_reward)),
          row("oracle-score", std::move(oracle_reward))};
}

std::string metrics_csv(std::span<const MetricRow> rows) {
  std::string out;
  out += kMetricsSchemaLine;
  out += '\n';
  out +=
      "strategy,avg_samples,avg_batches,avg_tokens,avg_pruned,mean_reward,"
      "success_rate,pct_max_improvement\n";
  for (const auto& r : rows) {
    out += r.strategy;
    out += ',';
    out += fmt_double(r.avg_samples);
    out += ',';
    out += fmt_double(r.avg_batches);
    out += ',';
    out += fmt_double(r.avg_tokens);
    out += ',';
    out += fmt_double(r.avg_pruned);
    out += ',';
    out += fmt_double(r.mean_reward);
    out += ',';
    out += fmt_double(r.success_rate);
    out += ',';
    out += r.pct_max_improvement ? fmt_double(*r.pct_max_improvement) : "nan";
    out += '\n';
  }
  return out;
}

}  // namespace abon::experiment
