#pragma once

#include <vector>

#include "abon/types.hpp"

namespace abon::scoring {

struct SampleRef {
  PromptId prompt_id = 0;
  int sample_index = 0;
};

/// A normalized self-evaluation of one (possibly partial) sample.
struct EvalScore {
  SampleRef sample_ref;
  int tokens_at_eval = 0;
  EvalLikelihoods likelihoods;
  double score = 0.0;  // p_good / (p_good + p_bad), in [0,1]
};

/// Normalizes raw target-token likelihoods into the win-or-tie score.
/// Throws DegenerateEvalError when both likelihoods are zero and
/// MisuseError when either is negative.
double normalize(const EvalLikelihoods& l);

EvalScore make_score(SampleRef ref, int tokens_at_eval, EvalLikelihoods l);

/// Stable descending order by score. Callers pass scores in generation
/// order, so ties resolve to the earlier batch / lower sample index.
/// Throws MisuseError on an empty list.
std::vector<EvalScore> rank(std::vector<EvalScore> scores);

}  // namespace abon::scoring
