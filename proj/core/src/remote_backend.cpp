#include "abon/remote_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include <httplib.h>

#include "abon/errors.hpp"

namespace abon {

using nlohmann::json;

namespace {

std::string_view lstrip(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() &&
         (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) {
    ++i;
  }
  return s.substr(i);
}

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw MalformedBodyError(std::string("completions response missing '") +
                             name + "'");
  }
  return *it;
}

struct CompletionResult {
  std::string text;
  int completion_tokens = 0;
  bool finished = false;
  json top_logprobs_first;  // first generated token's top log-probs, or null
};

CompletionResult parse_completion(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) {
    throw MalformedBodyError("completions response is not valid JSON");
  }
  const json& choices = field(j, "choices");
  if (!choices.is_array() || choices.empty()) {
    throw MalformedBodyError("completions response has no choices");
  }
  const json& choice = choices[0];

  CompletionResult result;
  result.text = field(choice, "text").get<std::string>();
  result.finished =
      choice.value("finish_reason", std::string("stop")) != "length";

  const json& usage = field(j, "usage");
  result.top_logprobs_first = json();
  if (choice.contains("logprobs") && !choice["logprobs"].is_null()) {
    const json& lp = choice["logprobs"];
    if (lp.contains("top_logprobs") && lp["top_logprobs"].is_array() &&
        !lp["top_logprobs"].empty()) {
      result.top_logprobs_first = lp["top_logprobs"][0];
    }
  }
  if (!usage.contains("completion_tokens") ||
      !usage["completion_tokens"].is_number()) {
    throw MalformedBodyError("completions usage lacks completion_tokens");
  }
  result.completion_tokens = usage["completion_tokens"].get<int>();
  return result;
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw MisuseError("RemoteBackend: base_url must be set");
  }
}

std::string RemoteBackend::eval_context(const std::string& prompt_text,
                                        const std::string& response_text,
                                        EvalPromptStyle style) {
  std::string out = prompt_text;
  out += response_text;
  if (style == EvalPromptStyle::raw) {
    out += "\n";
    out += kSelfEvalPrompt;
    out += "\n";
  } else {
    // Generic turn markers; servers with their own template treat these as
    // plain text, which is all the protocol promises.
    out += "\n<|user|>\n";
    out += kSelfEvalPrompt;
    out += "\n<|assistant|>\n";
  }
  return out;
}

std::string RemoteBackend::post_completions(const std::string& body) const {
  int attempt = 0;
  int backoff_ms = config_.backoff_ms;
  for (;;) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_ms / 1000,
                                  (config_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000,
                            (config_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    auto res = client.Post(config_.completions_path, headers, body,
                           "application/json");
    const bool transport_failure = !res;
    const bool retryable_status = res && res->status >= 500;

    if (!transport_failure && !retryable_status) {
      if (res->status < 200 || res->status >= 300) {
        throw HttpStatusError(res->status,
                              "completions call returned HTTP " +
                                  std::to_string(res->status));
      }
      return res->body;
    }

    if (attempt >= config_.retries) {
      if (transport_failure) {
        throw TransportError("completions call failed: " +
                             httplib::to_string(res.error()));
      }
      throw HttpStatusError(res->status, "completions call returned HTTP " +
                                             std::to_string(res->status) +
                                             " after retries");
    }
    ++attempt;
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
    backoff_ms *= 2;
  }
}

Sample RemoteBackend::start_generation(const GenerationRequest& req,
                                       int sample_index) {
  validate_request(req);

  json body;
  body["model"] = config_.model;
  body["prompt"] = req.prompt_text;
  body["temperature"] = std::max(req.temperature, config_.temperature_floor);
  body["max_tokens"] = req.token_budget;
  body["echo"] = false;
  if (config_.send_seed) body["seed"] = req.seed;

  const auto result = parse_completion(post_completions(body.dump()));

  Sample sample;
  sample.prompt_id = req.prompt_id;
  sample.sample_index = sample_index;
  sample.prompt_text = req.prompt_text;
  sample.tokens_generated = result.completion_tokens;
  sample.text = result.text;
  sample.finished = result.finished;
  if (!sample.finished) {
    sample.continuation = Continuation{0};
  }
  sample.temperature_used = req.temperature;
  sample.seed = req.seed;
  return sample;
}

Sample RemoteBackend::continue_generation(const Sample& sample,
                                          int extra_budget) {
  if (sample.finished || !sample.continuation.has_value()) {
    throw MisuseError("continue_generation: sample is already finished");
  }
  if (extra_budget < 1) {
    throw MisuseError("continue_generation: extra_budget must be >= 1");
  }

  // The partial text becomes part of the prompt; the server continues it.
  json body;
  body["model"] = config_.model;
  body["prompt"] = sample.prompt_text + sample.text;
  body["temperature"] =
      std::max(sample.temperature_used, config_.temperature_floor);
  body["max_tokens"] = extra_budget;
  body["echo"] = false;
  if (config_.send_seed) body["seed"] = sample.seed;

  const auto result = parse_completion(post_completions(body.dump()));

  Sample next = sample;
  next.tokens_generated += result.completion_tokens;
  next.text += result.text;
  next.finished = result.finished;
  if (next.finished) next.continuation.reset();
  return next;
}

EvalLikelihoods RemoteBackend::self_evaluate(const Sample& sample) {
  json body;
  body["model"] = config_.model;
  body["prompt"] =
      eval_context(sample.prompt_text, sample.text, config_.eval_prompt_style);
  body["temperature"] = std::max(0.0, config_.temperature_floor);
  body["max_tokens"] = 1;
  body["logprobs"] = config_.logprobs_depth;
  body["echo"] = false;
  if (config_.send_seed) body["seed"] = sample.seed;

  const auto result = parse_completion(post_completions(body.dump()));
  if (!result.top_logprobs_first.is_object()) {
    throw MalformedBodyError(
        "scoring response carries no top_logprobs for the generated token");
  }

  // Match token strings after stripping leading whitespace, so "No" and
  // " No" tokenizations both count; variants of one target accumulate.
  double p_good = 0.0;
  double p_bad = 0.0;
  bool saw_good = false;
  bool saw_bad = false;
  for (const auto& [token, logprob] : result.top_logprobs_first.items()) {
    const auto stripped = lstrip(token);
    if (stripped == kGoodToken) {
      p_good += std::exp(logprob.get<double>());
      saw_good = true;
    } else if (stripped == kBadToken) {
      p_bad += std::exp(logprob.get<double>());
      saw_bad = true;
    }
  }
  if (!saw_good && !saw_bad) {
    throw TokenNotFoundError(
        config_.logprobs_depth,
        "neither target token in top-" + std::to_string(config_.logprobs_depth) +
            " log-probabilities; raise logprobs depth");
  }
  if (p_good + p_bad > 1.0 + 1e-6) {
    throw MalformedBodyError(
        "target token likelihoods exceed 1; not one token distribution");
  }
  return EvalLikelihoods{p_good, p_bad};
}

}  // namespace abon
