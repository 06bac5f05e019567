#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "abon/sim_backend.hpp"

namespace abon {

/**
 * Default simulated workload: a seeded mixture of "saturated" prompts,
 * whose greedy response already sits near the top of the sampling
 * distribution (resampling is futile), and "improvable" prompts whose
 * greedy response lags it. Per-prompt means are spread out so that a
 * single global reward threshold cannot rank prompts consistently.
 */
struct WorkloadConfig {
  std::size_t n_prompts = 1000;
  std::uint64_t seed = 17;
  double saturated_fraction = 0.40;
  double mu_spread = 1.0;       // per-prompt mean ~ Normal(0, mu_spread)
  double sigma_lo = 0.75;       // per-prompt spread ~ Uniform(lo, hi)
  double sigma_hi = 1.25;
  double saturated_gap_lo = 1.6;   // greedy = mu + gap * sigma
  double saturated_gap_hi = 2.4;
  double improvable_gap_lo = -1.0;
  double improvable_gap_hi = 0.3;
  int full_length = 192;
  double length_sigma = 0.0;
  double epsilon = 0.01;
  double mid_noise_scale = 1.25;  // mid_noise_sigma0 = scale * sigma
  CalibrationMode mode = CalibrationMode::noisy;
  double eval_noise_sigma = 0.5;
};

struct Workload {
  WorkloadConfig config;
  std::vector<SimWorld> worlds;
};

/// Deterministic expansion of the config; world i draws from streams keyed
/// by (seed, i), so any prefix of the workload is stable under resizing.
Workload generate_workload(const WorkloadConfig& config);

void save_workload_jsonl(const Workload& workload,
                         const std::filesystem::path& path);
std::vector<SimWorld> load_workload_jsonl(const std::filesystem::path& path);

}  // namespace abon
