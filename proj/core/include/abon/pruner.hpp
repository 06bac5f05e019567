#pragma once

#include <span>

#include "abon/adaptive.hpp"
#include "abon/generator.hpp"

namespace abon::prune {

/// Parallel best-of-N with one mid-generation pruning barrier.
struct PruneConfig {
  int n_initial = 16;        // >= 1
  int prune_at_tokens = 128; // c; 0 selects survivors uniformly at random
  double prune_fraction = 0.75;  // in [0,1)
};

/// Throws MisuseError if the config violates its invariants.
void validate_config(const PruneConfig& cfg);

/// Survivor count: max(1, n - floor(n * fraction)).
int keep_count(const PruneConfig& cfg);

/// Total tokens generated, pruned prefixes and complete responses alike.
long long tokens_accounting(std::span<const Sample> samples);

/**
 * (1) starts n_initial generations in parallel at temperature 1.0 with a
 * token budget of prune_at_tokens; (2) mid-evaluates every unfinished
 * prefix and ranks by score — samples that finished before the barrier are
 * exempt; (3) stops the bottom prune_fraction, ties at the cut broken by
 * sample index; (4) continues the survivors to completion, full-evaluates
 * every completed sample, and returns the rank-best with exact token
 * accounting. Pruned samples keep their prefix tokens in the accounting
 * but are never evaluated as full responses and never selectable.
 *
 * prune_at_tokens == 0 is the random-pruning baseline: survivors are
 * chosen uniformly and pruned samples are never started (zero tokens).
 */
adaptive::RunStats run_pruned(const PromptSpec& prompt, Generator& gen,
                              const PruneConfig& cfg, int workers = 1);

}  // namespace abon::prune
