#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace abon {

using PromptId = std::uint64_t;

// Self-evaluation prompt and target tokens. The prompt frames a binary
// classification whose answer tokens are natural continuations, so a
// single next-token query yields the score.
inline constexpr std::string_view kSelfEvalPrompt =
    "Would you do better if you started over? (\"Yes.\" or \"No.\")";
inline constexpr std::string_view kGoodToken = "No";
inline constexpr std::string_view kBadToken = "Yes";

/// One generation call against a backend.
struct GenerationRequest {
  PromptId prompt_id = 0;
  std::string prompt_text;
  double temperature = 1.0;  // >= 0; 0 means greedy decoding
  int token_budget = 1;      // >= 1; max tokens produced by this call
  std::uint64_t seed = 0;    // determinism for the simulated backend
};

/// Opaque state needed to resume an unfinished sample.
struct Continuation {
  int sim_target_length = 0; // simulated: total length this sample will reach
};

/// One (possibly partial) generated response.
struct Sample {
  PromptId prompt_id = 0;
  int sample_index = 0;      // 0-based within the prompt
  std::string prompt_text;   // context the sample was generated from
  int tokens_generated = 0;  // monotone across continuations
  std::string text;          // may stay empty for the simulated backend
  bool finished = false;
  std::optional<Continuation> continuation;  // present iff not finished
  double temperature_used = 1.0;
  std::optional<double> latent_reward;  // simulated backend only; selection
                                        // logic never reads this
  std::uint64_t seed = 0;
};

/// Raw likelihoods of the good/bad target tokens. Both entries come from
/// one token distribution, so p_good + p_bad <= 1 (up to rounding).
struct EvalLikelihoods {
  double p_good = 0.0;
  double p_bad = 0.0;
};

}  // namespace abon
