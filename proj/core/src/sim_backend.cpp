#include "abon/sim_backend.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "abon/errors.hpp"
#include "abon/rng.hpp"
#include "abon/stats.hpp"

namespace abon {

namespace {

// Fraction of the eval-token distribution landing on the two target
// tokens. Anything below 1 models mass spuriously spent elsewhere and
// exercises the normalization downstream.
constexpr double kTargetTokenMass = 0.98;

double sigma_mid(const SimWorld& w, int t, int target_length) {
  if (target_length <= 0 || t >= target_length) return 0.0;
  const double remaining =
      1.0 - static_cast<double>(t) / static_cast<double>(target_length);
  return w.mid_noise_sigma0 * std::sqrt(std::max(0.0, remaining));
}

double score_given_view(const SimWorld& w, double r_view, double sigma_obs) {
  const double effective = std::hypot(w.sigma, sigma_obs);
  return stats::normal_cdf((r_view + w.epsilon - w.mu) / effective);
}

}  // namespace

void validate_world(const SimWorld& world) {
  if (world.sigma <= 0.0) throw MisuseError("SimWorld: sigma must be > 0");
  if (world.full_length < 1) {
    throw MisuseError("SimWorld: full_length must be >= 1");
  }
  if (world.mid_noise_sigma0 < 0.0) {
    throw MisuseError("SimWorld: mid_noise_sigma0 must be >= 0");
  }
  if (world.length_sigma < 0.0) {
    throw MisuseError("SimWorld: length_sigma must be >= 0");
  }
  if (world.eval_noise_sigma < 0.0) {
    throw MisuseError("SimWorld: eval_noise_sigma must be >= 0");
  }
}

double sim_true_score(const SimWorld& world, double r, int tokens_observed) {
  if (tokens_observed < 0 || tokens_observed > world.full_length) {
    throw MisuseError("sim_true_score: tokens_observed outside [0, L]");
  }
  return score_given_view(world, r,
                          sigma_mid(world, tokens_observed, world.full_length));
}

SimBackend::SimBackend(std::vector<SimWorld> worlds)
    : worlds_(std::move(worlds)) {
  for (std::size_t i = 0; i < worlds_.size(); ++i) {
    validate_world(worlds_[i]);
    if (worlds_[i].prompt_id != static_cast<PromptId>(i)) {
      throw MisuseError("SimBackend: world prompt_id must equal its index");
    }
  }
}

const SimWorld& SimBackend::world(PromptId prompt_id) const {
  if (prompt_id >= worlds_.size()) {
    throw MisuseError("SimBackend: unknown prompt_id");
  }
  return worlds_[prompt_id];
}

Sample SimBackend::start_generation(const GenerationRequest& req,
                                    int sample_index) {
  validate_request(req);
  const SimWorld& w = world(req.prompt_id);

  const double gamma = std::min(req.temperature, 1.0);
  rng::Stream reward_stream{req.seed, req.prompt_id,
                            static_cast<std::uint64_t>(sample_index),
                            rng::purpose::kLatentReward};
  const double z = reward_stream.normal(w.mu, w.sigma);
  const double reward = (1.0 - gamma) * w.greedy_reward + gamma * z;

  int target_length = w.full_length;
  if (w.length_sigma > 0.0) {
    rng::Stream length_stream{req.seed, req.prompt_id,
                              static_cast<std::uint64_t>(sample_index),
                              rng::purpose::kSampleLength};
    target_length = std::max(
        1, static_cast<int>(
               std::lround(length_stream.normal(w.full_length, w.length_sigma))));
  }

  Sample sample;
  sample.prompt_id = req.prompt_id;
  sample.sample_index = sample_index;
  sample.prompt_text = req.prompt_text;
  sample.tokens_generated = std::min(req.token_budget, target_length);
  sample.finished = sample.tokens_generated == target_length;
  if (!sample.finished) {
    sample.continuation = Continuation{target_length};
  }
  sample.temperature_used = req.temperature;
  sample.latent_reward = reward;
  sample.seed = req.seed;
  return sample;
}

Sample SimBackend::continue_generation(const Sample& sample,
                                       int extra_budget) {
  if (sample.finished || !sample.continuation.has_value()) {
    throw MisuseError("continue_generation: sample is already finished");
  }
  if (extra_budget < 1) {
    throw MisuseError("continue_generation: extra_budget must be >= 1");
  }
  const int target_length = sample.continuation->sim_target_length;

  Sample next = sample;
  next.tokens_generated =
      std::min(sample.tokens_generated + extra_budget, target_length);
  next.finished = next.tokens_generated == target_length;
  if (next.finished) {
    next.continuation.reset();
  }
  return next;
}

EvalLikelihoods SimBackend::self_evaluate(const Sample& sample) {
  const SimWorld& w = world(sample.prompt_id);
  if (!sample.latent_reward.has_value()) {
    throw MisuseError("self_evaluate: simulated sample without latent reward");
  }

  const int target_length = sample.finished
                                ? sample.tokens_generated
                                : sample.continuation->sim_target_length;
  const int t = sample.tokens_generated;
  const double obs_sigma = sigma_mid(w, t, target_length);

  // Mid-generation, the evaluator sees the final reward through noise
  // that shrinks as the prefix grows; the score marginalizes it.
  double r_view = *sample.latent_reward;
  if (obs_sigma > 0.0) {
    rng::Stream obs_stream{sample.seed, sample.prompt_id,
                           static_cast<std::uint64_t>(sample.sample_index),
                           rng::purpose::kEvalObservation,
                           static_cast<std::uint64_t>(t)};
    r_view += obs_stream.normal(0.0, obs_sigma);
  }
  double score = score_given_view(w, r_view, obs_sigma);

  if (w.calibration_mode == CalibrationMode::noisy &&
      w.eval_noise_sigma > 0.0) {
    rng::Stream logit_stream{sample.seed, sample.prompt_id,
                             static_cast<std::uint64_t>(sample.sample_index),
                             rng::purpose::kEvalLogitNoise,
                             static_cast<std::uint64_t>(t)};
    score = stats::sigmoid(stats::logit(score) +
                           logit_stream.normal(0.0, w.eval_noise_sigma));
  }

  return EvalLikelihoods{kTargetTokenMass * score,
                         kTargetTokenMass * (1.0 - score)};
}

}  // namespace abon
