#include "abon/adaptive.hpp"

#include <cmath>
#include <functional>
#include <utility>

#include "abon/errors.hpp"
#include "abon/parallel.hpp"
#include "abon/pruner.hpp"

namespace abon::adaptive {

void validate_policy(const AdaptivePolicy& policy) {
  if (policy.tau < 0.0 || policy.tau > 1.0) {
    throw MisuseError("AdaptivePolicy: tau must be in [0,1]");
  }
  if (policy.n_max < 1) {
    throw MisuseError("AdaptivePolicy: n_max must be >= 1");
  }
}

int batch_size(int k) {
  if (k < 1) throw MisuseError("batch_size: iteration must be >= 1");
  if (k > 31) throw MisuseError("batch_size: iteration exceeds the int range");
  return k == 1 ? 1 : 1 << (k - 2);
}

double temperature(int k, bool annealing) {
  if (k < 1) throw MisuseError("temperature: iteration must be >= 1");
  if (!annealing) return 1.0;
  return 1.0 - std::exp2(-(k - 1));
}

namespace {

// Stop predicate over one evaluated sample of the current batch; the loop
// breaks after any batch containing a sample for which it returns true.
using StopPredicate =
    std::function<bool(const Sample&, const scoring::EvalScore&)>;

RunStats run_loop(const PromptSpec& prompt, Generator& gen,
                  const AdaptivePolicy& policy, const StopPredicate& stop,
                  int workers) {
  validate_policy(policy);

  RunStats stats;
  stats.prompt_id = prompt.prompt_id;

  std::vector<Sample> samples;
  samples.reserve(policy.n_max);

  int cumulative = 0;
  bool threshold_fired = false;
  for (int k = 1; cumulative < policy.n_max && !threshold_fired; ++k) {
    const int issued = std::min(batch_size(k), policy.n_max - cumulative);
    const double gamma = temperature(k, policy.annealing);

    GenerationRequest req;
    req.prompt_id = prompt.prompt_id;
    req.prompt_text = prompt.prompt_text;
    req.temperature = gamma;
    req.token_budget = prompt.max_tokens;
    req.seed = prompt.seed;

    // Generate and evaluate the batch in parallel; each task owns one
    // result slot, so the reduction is independent of completion order.
    const std::size_t base = samples.size();
    samples.resize(base + issued);
    std::vector<scoring::EvalScore> batch_scores(issued);
    try {
      parallel_for(issued, workers, [&](std::size_t i) {
        const int index = static_cast<int>(base + i);
        Sample s = gen.start_generation(req, index);
        batch_scores[i] = scoring::make_score(
            {s.prompt_id, s.sample_index}, s.tokens_generated,
            gen.self_evaluate(s));
        samples[base + i] = std::move(s);
      });
    } catch (const std::exception& e) {
      // Surface the failure with the accounting of the completed batches.
      RunStats partial = stats;
      partial.samples_used = static_cast<int>(base);
      partial.stopped_early = false;
      samples.resize(base);
      for (const Sample& s : samples) {
        partial.sample_tokens.push_back(s.tokens_generated);
      }
      partial.tokens_generated = prune::tokens_accounting(samples);
      throw RunAbortedError(std::string("adaptive run aborted in batch ") +
                                std::to_string(k) + ": " + e.what(),
                            std::move(partial));
    }

    cumulative += issued;
    stats.batch_sizes.push_back(issued);
    stats.batches_used = k;
    for (int i = 0; i < issued; ++i) {
      stats.all_scores.push_back(batch_scores[i]);
      if (stop(samples[base + i], batch_scores[i])) threshold_fired = true;
    }
  }

  stats.samples_used = cumulative;
  stats.stopped_early = threshold_fired;
  stats.sample_tokens.reserve(samples.size());
  for (const Sample& s : samples) {
    stats.sample_tokens.push_back(s.tokens_generated);
  }
  stats.tokens_generated = prune::tokens_accounting(samples);

  const auto ranked = scoring::rank(stats.all_scores);
  stats.best = ranked.front();
  stats.selected = samples[static_cast<std::size_t>(
      stats.best.sample_ref.sample_index)];
  return stats;
}

}  // namespace

RunStats run_adaptive(const PromptSpec& prompt, Generator& gen,
                      const AdaptivePolicy& policy, int workers) {
  const double tau = policy.tau;
  return run_loop(
      prompt, gen, policy,
      [tau](const Sample&, const scoring::EvalScore& score) {
        return score.score > tau;  // strict, so tau=1 never stops early
      },
      workers);
}

RunStats run_adaptive_reward_stop(const PromptSpec& prompt, Generator& gen,
                                  const AdaptivePolicy& policy,
                                  double reward_threshold, int workers) {
  return run_loop(
      prompt, gen, policy,
      [reward_threshold](const Sample& s, const scoring::EvalScore&) {
        if (!s.latent_reward.has_value()) {
          throw MisuseError(
              "run_adaptive_reward_stop: backend exposes no reward");
        }
        return *s.latent_reward > reward_threshold;
      },
      workers);
}

}  // namespace abon::adaptive
