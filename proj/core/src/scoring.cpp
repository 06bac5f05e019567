#include "abon/scoring.hpp"

#include <algorithm>

#include "abon/errors.hpp"

namespace abon::scoring {

double normalize(const EvalLikelihoods& l) {
  if (l.p_good < 0.0 || l.p_bad < 0.0) {
    throw MisuseError("normalize: likelihoods must be non-negative");
  }
  const double total = l.p_good + l.p_bad;
  if (total == 0.0) {
    throw DegenerateEvalError(
        "normalize: no probability mass on either target token");
  }
  return l.p_good / total;
}

EvalScore make_score(SampleRef ref, int tokens_at_eval, EvalLikelihoods l) {
  return EvalScore{ref, tokens_at_eval, l, normalize(l)};
}

std::vector<EvalScore> rank(std::vector<EvalScore> scores) {
  if (scores.empty()) {
    throw MisuseError("rank: empty score list");
  }
  // Stable: ties keep generation order (earlier batch, lower sample index).
  std::stable_sort(scores.begin(), scores.end(),
                   [](const EvalScore& a, const EvalScore& b) {
                     return a.score > b.score;
                   });
  return scores;
}

}  // namespace abon::scoring
