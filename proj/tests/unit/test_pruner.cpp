#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "abon/errors.hpp"
#include "abon/experiment.hpp"
#include "abon/pruner.hpp"
#include "abon/sim_backend.hpp"

using namespace abon;
using prune::PruneConfig;

namespace {

SimWorld pruning_world(PromptId id, int length = 100,
                       double mid_noise = 0.0) {
  SimWorld w;
  w.prompt_id = id;
  w.mu = 0.0;
  w.sigma = 1.0;
  w.greedy_reward = 0.0;
  w.full_length = length;
  w.epsilon = 0.01;
  w.mid_noise_sigma0 = mid_noise;
  w.calibration_mode = CalibrationMode::exact;
  return w;
}

PromptSpec prompt_for(PromptId id, std::uint64_t seed, int max_tokens) {
  PromptSpec p;
  p.prompt_id = id;
  p.seed = seed;
  p.max_tokens = max_tokens;
  return p;
}

}  // namespace

TEST_CASE("keep_count: at least one survivor, reference ratios") {
  CHECK(prune::keep_count({16, 128, 0.75}) == 4);
  CHECK(prune::keep_count({16, 64, 0.50}) == 8);
  CHECK(prune::keep_count({16, 128, 0.0}) == 16);
  CHECK(prune::keep_count({4, 10, 0.99}) == 1);
  CHECK(prune::keep_count({1, 10, 0.5}) == 1);
}

TEST_CASE("config validation") {
  SimBackend backend({pruning_world(0)});
  const PromptSpec p = prompt_for(0, 1, 1 << 20);
  CHECK_THROWS_AS(prune::run_pruned(p, backend, {0, 128, 0.5}), MisuseError);
  CHECK_THROWS_AS(prune::run_pruned(p, backend, {16, -1, 0.5}), MisuseError);
  CHECK_THROWS_AS(prune::run_pruned(p, backend, {16, 128, 1.0}), MisuseError);
  CHECK_THROWS_AS(prune::run_pruned(p, backend, {16, 128, -0.1}), MisuseError);
}

TEST_CASE("tokens_accounting: sums pruned and complete alike") {
  CHECK(prune::tokens_accounting({}) == 0);

  Sample prefix;
  prefix.tokens_generated = 64;
  CHECK(prune::tokens_accounting(std::vector<Sample>{prefix}) == 64);

  Sample full;
  full.tokens_generated = 454;
  full.finished = true;
  std::vector<Sample> both{prefix, full};
  CHECK(prune::tokens_accounting(both) == 64 + 454);
}

TEST_CASE("run_pruned: exact accounting with constant lengths") {
  // n=4, keep=1, c=10, L=100: 4 prefixes of 10 plus one completion.
  SimBackend backend({pruning_world(0, 100)});
  const auto stats = prune::run_pruned(prompt_for(0, 5, 1 << 20), backend,
                                       {4, 10, 0.75});
  CHECK(stats.samples_used == 1);
  CHECK(stats.samples_pruned == 3);
  CHECK(stats.tokens_generated == 4 * 10 + 1 * 90);

  // Production-scale shape: n=16, c=128, keep 4, L=454.
  SimBackend paper_scale({pruning_world(0, 454)});
  const auto big = prune::run_pruned(prompt_for(0, 5, 1 << 20), paper_scale,
                                     {16, 128, 0.75});
  CHECK(big.samples_used == 4);
  CHECK(big.samples_pruned == 12);
  CHECK(big.tokens_generated == 16 * 128 + 4 * (454 - 128));
}

TEST_CASE("run_pruned: n=16 prune 75% leaves 4 continuing past the barrier") {
  SimBackend backend({pruning_world(0, 454)});
  const auto stats = prune::run_pruned(prompt_for(0, 21, 1 << 20), backend,
                                       {16, 128, 0.75});
  CHECK(stats.samples_used == 4);
  int full_count = 0;
  for (int t : stats.sample_tokens) {
    if (t == 454) ++full_count;
  }
  CHECK(full_count == 4);
}

TEST_CASE("run_pruned: zero-noise pruning never discards the winner") {
  // Perfect mid-generation information keeps the eventual best sample, so
  // selection matches no-pruning best-of-N on every seeded prompt.
  SimBackend backend({pruning_world(0, 200, 0.0)});
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto pruned = prune::run_pruned(prompt_for(0, seed, 1 << 20),
                                          backend, {16, 64, 0.75});
    const auto full =
        experiment::run_fixed(prompt_for(0, seed, 1 << 20), backend, 16);
    CHECK(pruned.best.sample_ref.sample_index ==
          full.best.sample_ref.sample_index);
  }
}

TEST_CASE("run_pruned: pruned samples never get a full evaluation") {
  SimBackend backend({pruning_world(0, 200, 1.0)});
  const auto stats = prune::run_pruned(prompt_for(0, 33, 1 << 20), backend,
                                       {16, 64, 0.75});
  CHECK(stats.all_scores.size() == 4);
  for (const auto& s : stats.all_scores) {
    CHECK(s.tokens_at_eval == 200);  // only completed responses are scored
  }
  // 16 token entries in the audit trail: 4 full, 12 prefixes.
  CHECK(stats.sample_tokens.size() == 16);
  CHECK(std::count(stats.sample_tokens.begin(), stats.sample_tokens.end(),
                   64) == 12);
}

TEST_CASE("run_pruned: early finishers are exempt and selectable") {
  // Length 50 < barrier 64: every sample finishes before the barrier, so
  // nothing is pruned (degenerate case) and all 16 compete.
  SimBackend backend({pruning_world(0, 50)});
  const auto stats = prune::run_pruned(prompt_for(0, 9, 1 << 20), backend,
                                       {16, 64, 0.75});
  CHECK(stats.samples_used == 16);
  CHECK(stats.samples_pruned == 0);
  CHECK(stats.tokens_generated == 16 * 50);
  CHECK(stats.all_scores.size() == 16);
}

TEST_CASE("run_pruned: accounting stays exact under variable lengths") {
  SimWorld w = pruning_world(0, 454);
  w.length_sigma = 150.0;
  SimBackend backend({w});

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto stats = prune::run_pruned(prompt_for(0, seed, 1 << 20), backend,
                                         {16, 128, 0.75});
    long long from_samples = 0;
    for (int t : stats.sample_tokens) from_samples += t;
    CHECK(stats.tokens_generated == from_samples);
    CHECK(stats.sample_tokens.size() == 16);
    // Early finishers (length < 128) are exempt, so at most 12 are pruned
    // and at least 4 run to completion.
    CHECK(stats.samples_pruned <= 12);
    CHECK(stats.samples_used >= 4);
  }
}

TEST_CASE("run_pruned: c=0 is seeded random pruning with zero prefix cost") {
  SimBackend backend({pruning_world(0, 100)});
  const auto a =
      prune::run_pruned(prompt_for(0, 7, 1 << 20), backend, {16, 0, 0.75});
  const auto b =
      prune::run_pruned(prompt_for(0, 7, 1 << 20), backend, {16, 0, 0.75});
  CHECK(a.samples_used == 4);
  CHECK(a.samples_pruned == 12);
  CHECK(a.tokens_generated == 4 * 100);  // pruned samples were never started
  CHECK(a.best.sample_ref.sample_index == b.best.sample_ref.sample_index);
  CHECK(a.best.score == b.best.score);

  // Different prompts draw different survivor sets.
  std::set<int> survivors_seen;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run =
        prune::run_pruned(prompt_for(0, seed, 1 << 20), backend, {16, 0, 0.9});
    survivors_seen.insert(run.best.sample_ref.sample_index);
  }
  CHECK(survivors_seen.size() > 1);
}

TEST_CASE("run_pruned: worker count does not change the outcome") {
  SimBackend backend({pruning_world(0, 200, 1.0)});
  const auto serial =
      prune::run_pruned(prompt_for(0, 3, 1 << 20), backend, {16, 64, 0.5}, 1);
  const auto parallel =
      prune::run_pruned(prompt_for(0, 3, 1 << 20), backend, {16, 64, 0.5}, 8);
  CHECK(serial.best.sample_ref.sample_index ==
        parallel.best.sample_ref.sample_index);
  CHECK(serial.tokens_generated == parallel.tokens_generated);
}
