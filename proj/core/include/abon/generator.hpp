#pragma once

#include <cstdint>
#include <string>

#include "abon/types.hpp"

namespace abon {

/**
 * Generation backend: temperature-controlled sampling, suspension and
 * resumption at token boundaries, and self-evaluation likelihood queries.
 *
 * Backends must be safe for concurrent use by multiple in-flight
 * generations. One Sample is owned by one logical task at a time;
 * continuation handles are never shared.
 */
class Generator {
 public:
  virtual ~Generator() = default;

  /// Starts a new generation. `sample_index` is the caller-assigned 0-based
  /// position of this sample within its prompt; it selects the per-sample
  /// random stream, so results are independent of execution order.
  virtual Sample start_generation(const GenerationRequest& req,
                                  int sample_index) = 0;

  /// Extends an unfinished sample by at most `extra_budget` tokens.
  /// Continuing a finished sample is a contract violation (MisuseError).
  virtual Sample continue_generation(const Sample& sample,
                                     int extra_budget) = 0;

  /// Scores a full or partial response: likelihoods of the good/bad target
  /// tokens after appending the self-evaluation prompt.
  virtual EvalLikelihoods self_evaluate(const Sample& sample) = 0;
};

/// Everything a sampling strategy needs to issue generations for one prompt.
struct PromptSpec {
  PromptId prompt_id = 0;
  std::string prompt_text;
  std::uint64_t seed = 0;
  int max_tokens = 1 << 20;  // per-sample cap on full generations
};

/// Throws MisuseError if the request violates its invariants.
void validate_request(const GenerationRequest& req);

}  // namespace abon
