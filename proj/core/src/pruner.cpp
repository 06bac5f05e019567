#include "abon/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "abon/errors.hpp"
#include "abon/parallel.hpp"
#include "abon/rng.hpp"

namespace abon::prune {

void validate_config(const PruneConfig& cfg) {
  if (cfg.n_initial < 1) {
    throw MisuseError("PruneConfig: n_initial must be >= 1");
  }
  if (cfg.prune_at_tokens < 0) {
    throw MisuseError("PruneConfig: prune_at_tokens must be >= 0");
  }
  if (cfg.prune_fraction < 0.0 || cfg.prune_fraction >= 1.0) {
    throw MisuseError("PruneConfig: prune_fraction must be in [0,1)");
  }
}

int keep_count(const PruneConfig& cfg) {
  const int pruned = static_cast<int>(
      std::floor(cfg.n_initial * cfg.prune_fraction));
  return std::max(1, cfg.n_initial - pruned);
}

long long tokens_accounting(std::span<const Sample> samples) {
  long long total = 0;
  for (const Sample& s : samples) total += s.tokens_generated;
  return total;
}

namespace {

// Selection over the completed samples, in sample-index order so ranking
// ties resolve deterministically.
adaptive::RunStats finish_stats(const PromptSpec& prompt,
                                std::vector<Sample> completed,
                                std::vector<Sample> pruned, Generator& gen,
                                int workers) {
  std::sort(completed.begin(), completed.end(),
            [](const Sample& a, const Sample& b) {
              return a.sample_index < b.sample_index;
            });

  std::vector<scoring::EvalScore> scores(completed.size());
  parallel_for(completed.size(), workers, [&](std::size_t i) {
    const Sample& s = completed[i];
    scores[i] = scoring::make_score({s.prompt_id, s.sample_index},
                                    s.tokens_generated, gen.self_evaluate(s));
  });

  adaptive::RunStats stats;
  stats.prompt_id = prompt.prompt_id;
  stats.samples_used = static_cast<int>(completed.size());
  stats.samples_pruned = static_cast<int>(pruned.size());
  stats.batches_used = 1;  // one parallel round, a barrier is not a batch
  stats.all_scores = scores;

  for (const Sample& s : completed) {
    stats.sample_tokens.push_back(s.tokens_generated);
  }
  for (const Sample& s : pruned) {
    stats.sample_tokens.push_back(s.tokens_generated);
  }
  std::vector<Sample> all = completed;
  all.insert(all.end(), pruned.begin(), pruned.end());
  stats.tokens_generated = tokens_accounting(all);

  const auto ranked = scoring::rank(scores);
  stats.best = ranked.front();
  for (const Sample& s : completed) {
    if (s.sample_index == stats.best.sample_ref.sample_index) {
      stats.selected = s;
      break;
    }
  }
  return stats;
}

adaptive::RunStats run_random_pruned(const PromptSpec& prompt, Generator& gen,
                                     const PruneConfig& cfg, int workers) {
  const int keep = keep_count(cfg);

  // Partial Fisher-Yates over the index range; unpicked samples are never
  // started, so they contribute zero tokens.
  std::vector<int> indices(cfg.n_initial);
  std::iota(indices.begin(), indices.end(), 0);
  rng::Stream pick_stream{prompt.seed, prompt.prompt_id,
                          rng::purpose::kPruneRandom};
  for (int i = 0; i < keep; ++i) {
    const auto j =
        i + static_cast<int>(pick_stream.uniform_int(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  std::vector<int> survivors(indices.begin(), indices.begin() + keep);
  std::sort(survivors.begin(), survivors.end());

  GenerationRequest req;
  req.prompt_id = prompt.prompt_id;
  req.prompt_text = prompt.prompt_text;
  req.temperature = 1.0;
  req.token_budget = prompt.max_tokens;
  req.seed = prompt.seed;

  std::vector<Sample> completed(survivors.size());
  parallel_for(survivors.size(), workers, [&](std::size_t i) {
    completed[i] = gen.start_generation(req, survivors[i]);
  });

  auto stats = finish_stats(prompt, std::move(completed), {}, gen, workers);
  stats.samples_pruned = cfg.n_initial - keep;
  return stats;
}

}  // namespace

adaptive::RunStats run_pruned(const PromptSpec& prompt, Generator& gen,
                              const PruneConfig& cfg, int workers) {
  validate_config(cfg);
  if (cfg.prune_at_tokens == 0) {
    return run_random_pruned(prompt, gen, cfg, workers);
  }

  GenerationRequest req;
  req.prompt_id = prompt.prompt_id;
  req.prompt_text = prompt.prompt_text;
  req.temperature = 1.0;
  req.token_budget = std::min(cfg.prune_at_tokens, prompt.max_tokens);
  req.seed = prompt.seed;

  // Phase 1: all prefixes in parallel up to the barrier.
  std::vector<Sample> prefixes(cfg.n_initial);
  parallel_for(cfg.n_initial, workers, [&](std::size_t i) {
    prefixes[i] = gen.start_generation(req, static_cast<int>(i));
  });

  std::vector<Sample> completed;  // finished before the barrier: exempt
  std::vector<Sample> unfinished;
  for (Sample& s : prefixes) {
    (s.finished ? completed : unfinished).push_back(std::move(s));
  }

  // Phase 2: mid-generation evaluation of the unfinished prefixes only.
  std::vector<scoring::EvalScore> mid_scores(unfinished.size());
  parallel_for(unfinished.size(), workers, [&](std::size_t i) {
    const Sample& s = unfinished[i];
    mid_scores[i] = scoring::make_score({s.prompt_id, s.sample_index},
                                        s.tokens_generated,
                                        gen.self_evaluate(s));
  });

  const int prune_target = static_cast<int>(
      std::floor(cfg.n_initial * cfg.prune_fraction));
  const int prune_n =
      std::min(prune_target, static_cast<int>(unfinished.size()));

  std::vector<Sample> pruned;
  std::vector<Sample> survivors;
  if (prune_n > 0) {
    const auto ranked = scoring::rank(mid_scores);
    const std::size_t keep_n = ranked.size() - static_cast<std::size_t>(prune_n);
    std::vector<bool> keep_index(cfg.n_initial, false);
    for (std::size_t i = 0; i < keep_n; ++i) {
      keep_index[static_cast<std::size_t>(ranked[i].sample_ref.sample_index)] =
          true;
    }
    for (Sample& s : unfinished) {
      (keep_index[static_cast<std::size_t>(s.sample_index)] ? survivors
                                                            : pruned)
          .push_back(std::move(s));
    }
  } else {
    survivors = std::move(unfinished);
  }

  // Phase 3: survivors run to completion.
  const std::size_t first_survivor = completed.size();
  completed.resize(first_survivor + survivors.size());
  parallel_for(survivors.size(), workers, [&](std::size_t i) {
    const Sample& s = survivors[i];
    const int extra = std::max(1, prompt.max_tokens - s.tokens_generated);
    completed[first_survivor + i] = gen.continue_generation(s, extra);
  });

  return finish_stats(prompt, std::move(completed), std::move(pruned), gen,
                      workers);
}

}  // namespace abon::prune
