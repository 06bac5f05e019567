#pragma once

#include <cstdint>
#include <string>

#include "abon/generator.hpp"
#include "abon/types.hpp"

namespace abon {

/// How the self-evaluation prompt is appended to (prompt, response) before
/// the scoring call. Raw continuation text, or generic chat turn markers.
enum class EvalPromptStyle { raw, chat };

struct RemoteConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::string completions_path = "/v1/completions";
  std::string model;
  std::string api_key;      // sent as a bearer token when non-empty
  int logprobs_depth = 20;  // top log-probabilities requested per token
  int timeout_ms = 30000;
  int retries = 3;          // on transport errors and 5xx statuses
  int backoff_ms = 100;     // doubled after each failed attempt
  double temperature_floor = 0.0;  // for servers that reject temperature 0
  EvalPromptStyle eval_prompt_style = EvalPromptStyle::raw;
  bool send_seed = true;
};

/**
 * HTTP JSON completions backend.
 *
 * Requests: {model, prompt, temperature, max_tokens, logprobs, echo:false,
 * seed?}; self-evaluation uses max_tokens=1 and reads the good/bad token
 * likelihoods from the first generated token's top log-probabilities
 * ("No" and " No" forms both match). Token counts come from the server's
 * reported usage. Errors are surfaced as TransportError, HttpStatusError,
 * MalformedBodyError, or TokenNotFoundError; a failed call never mutates
 * engine state, so the sample stays resumable.
 */
class RemoteBackend final : public Generator {
 public:
  explicit RemoteBackend(RemoteConfig config);

  Sample start_generation(const GenerationRequest& req,
                          int sample_index) override;
  Sample continue_generation(const Sample& sample, int extra_budget) override;
  EvalLikelihoods self_evaluate(const Sample& sample) override;

  const RemoteConfig& config() const { return config_; }

  /// Context assembled for the scoring call: prompt, partial or full
  /// response, then the self-eval prompt in the configured style.
  static std::string eval_context(const std::string& prompt_text,
                                  const std::string& response_text,
                                  EvalPromptStyle style);

 private:
  std::string post_completions(const std::string& body) const;

  RemoteConfig config_;
};

}  // namespace abon
