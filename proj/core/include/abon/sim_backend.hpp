#pragma once

#include <cstdint>
#include <vector>

#include "abon/generator.hpp"
#include "abon/types.hpp"

namespace abon {

enum class CalibrationMode {
  exact,  // self-evaluation returns the analytic win-or-tie probability
  noisy,  // analytic score perturbed in logit space
};

/**
 * Per-prompt parameters of the simulated generator.
 *
 * The simulated backend draws a latent reward per sample and exposes
 * self-evaluations whose normalized score is the probability that
 * resampling cannot beat that reward:
 *
 *   score(r, t) = Phi((r + epsilon - mu) / sqrt(sigma^2 + sigma_mid(t)^2))
 *   sigma_mid(t) = mid_noise_sigma0 * sqrt(1 - t/L)
 *
 * Mid-generation, the evaluator sees a noisy view of the final reward
 * (r_hat = r + Normal(0, sigma_mid)) and the variance-inflated CDF is the
 * calibrated marginal of that observation model.
 */
struct SimWorld {
  PromptId prompt_id = 0;
  double mu = 0.0;            // mean latent reward under temperature-1 sampling
  double sigma = 1.0;         // > 0; latent reward spread
  double greedy_reward = 0.0; // reward of the temperature-0 sample
  int full_length = 1;        // >= 1; tokens of a complete response
  double epsilon = 0.01;      // tie threshold, shared with pair labeling
  double mid_noise_sigma0 = 0.0;
  double length_sigma = 0.0;  // 0 keeps lengths constant at full_length
  CalibrationMode calibration_mode = CalibrationMode::exact;
  double eval_noise_sigma = 0.0;  // logit perturbation std in noisy mode
};

/// Throws MisuseError if the world violates its invariants.
void validate_world(const SimWorld& world);

/// Marginal win-or-tie probability of a sample with reward view r observed
/// after t of world.full_length tokens. t == full_length gives the exact
/// finished-sample probability Phi((r + eps - mu)/sigma); smaller t inflates
/// the variance by sigma_mid(t)^2.
double sim_true_score(const SimWorld& world, double r, int tokens_observed);

/**
 * Analytic generator used for desk-scale experiments.
 *
 * Latent reward at temperature g:  r = (1 - min(g,1)) * greedy_reward
 *                                    + min(g,1) * z,  z ~ Normal(mu, sigma).
 * All randomness comes from streams keyed by (seed, prompt, sample, purpose),
 * so two runs with the same seeds are bit-identical regardless of thread
 * count, and no internal synchronization is needed.
 */
class SimBackend final : public Generator {
 public:
  /// Worlds are indexed by their prompt_id, which must equal their position.
  explicit SimBackend(std::vector<SimWorld> worlds);

  const SimWorld& world(PromptId prompt_id) const;
  std::size_t prompt_count() const { return worlds_.size(); }

  Sample start_generation(const GenerationRequest& req,
                          int sample_index) override;
  Sample continue_generation(const Sample& sample, int extra_budget) override;
  EvalLikelihoods self_evaluate(const Sample& sample) override;

 private:
  std::vector<SimWorld> worlds_;
};

}  // namespace abon
