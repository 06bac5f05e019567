#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "abon/errors.hpp"
#include "abon/generator.hpp"
#include "abon/scoring.hpp"
#include "abon/types.hpp"

namespace abon::adaptive {

/// Adaptive sampling policy: resample in exponentially growing batches
/// until any sample's win-or-tie score strictly exceeds tau or n_max
/// samples have been generated.
struct AdaptivePolicy {
  double tau = 1.0;      // in [0,1]; stop rule is score > tau (strict)
  int n_max = 16;        // >= 1
  bool annealing = true; // false pins the temperature at 1.0 for all batches
};

/// Throws MisuseError if the policy violates its invariants.
void validate_policy(const AdaptivePolicy& policy);

/// Batch size of the k-th iteration (k >= 1): 1, 1, 2, 4, 8, ...
/// The cumulative count through iteration k is 2^(k-1).
int batch_size(int k);

/// Temperature of the k-th iteration: 1 - 2^-(k-1) when annealing,
/// otherwise 1.0.
double temperature(int k, bool annealing);

/// Per-prompt accounting of one sampling run.
struct RunStats {
  PromptId prompt_id = 0;
  int samples_used = 0;   // fully generated samples
  int batches_used = 0;   // sequential rounds, counting the stopping one
  long long tokens_generated = 0;  // includes pruned prefixes
  int samples_pruned = 0;          // pruning strategy only
  scoring::EvalScore best;
  Sample selected;
  bool stopped_early = false;  // the tau rule fired

  // Audit trail, used by the metrics log and the test suites.
  std::vector<int> batch_sizes;
  std::vector<int> sample_tokens;              // per started sample
  std::vector<scoring::EvalScore> all_scores;  // full-response evaluations
};

/// Generator failure mid-run; carries the accounting of every batch that
/// completed before the failure.
class RunAbortedError : public Error {
 public:
  RunAbortedError(const std::string& what, RunStats partial)
      : Error(what), partial_(std::move(partial)) {}
  const RunStats& partial() const { return partial_; }

 private:
  RunStats partial_;
};

/**
 * Algorithm: loop k = 1, 2, ... issuing batch_size(k) full generations in
 * parallel at temperature(k), clamping the final batch so the cumulative
 * count never exceeds policy.n_max. Every finished sample is
 * self-evaluated; the loop stops after any batch containing a score
 * strictly greater than tau. Selection is best-by-rank over ALL generated
 * samples, not just the stopping batch.
 *
 * Generator errors surface as RunAbortedError with partial accounting.
 */
RunStats run_adaptive(const PromptSpec& prompt, Generator& gen,
                      const AdaptivePolicy& policy, int workers = 1);

/**
 * Baseline variant that stops on the raw underlying reward instead of the
 * win-or-tie score. Selection is unchanged (still by score), so only the
 * stop rule differs. Requires a backend that exposes latent rewards.
 */
RunStats run_adaptive_reward_stop(const PromptSpec& prompt, Generator& gen,
                                  const AdaptivePolicy& policy,
                                  double reward_threshold, int workers = 1);

}  // namespace abon::adaptive
