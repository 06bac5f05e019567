#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <thread>
#include <vector>

#include "abon/errors.hpp"
#include "abon/scoring.hpp"
#include "abon/sim_backend.hpp"

using namespace abon;

namespace {

SimWorld basic_world(PromptId id = 0) {
  SimWorld w;
  w.prompt_id = id;
  w.mu = 0.0;
  w.sigma = 1.0;
  w.greedy_reward = 0.3;
  w.full_length = 454;
  w.epsilon = 0.01;
  return w;
}

// Independent brute-force oracle for the finished-sample score:
// P_{r' ~ Normal(mu, sigma)}(r - r' >= -eps), estimated from paired
// antithetic draws so 1e6 samples land well inside 1e-3.
double mc_win_or_tie(double r, double mu, double sigma, double eps,
                     std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws / 2; ++i) {
    const double z = unit(engine);
    const double r_plus = mu + sigma * z;
    const double r_minus = mu - sigma * z;
    hits += (r - r_plus >= -eps) ? 1 : 0;
    hits += (r - r_minus >= -eps) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(2 * (draws / 2));
}

// Prior win-or-tie rate over independent pairs (r, r').
double mc_prior_win_or_tie(double mu, double sigma, double eps,
                           std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> dist(mu, sigma);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double r = dist(engine);
    const double r_prime = dist(engine);
    hits += (r - r_prime >= -eps) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace

TEST_CASE("start_generation: greedy collapses to the greedy reward") {
  SimBackend backend({basic_world()});
  GenerationRequest req{0, "", 0.0, 500, 1234};
  for (int index : {0, 1, 5}) {
    const Sample s = backend.start_generation(req, index);
    CHECK(*s.latent_reward == doctest::Approx(0.3).epsilon(1e-15));
  }
}

TEST_CASE("start_generation: budget vs length") {
  SimBackend backend({basic_world()});

  GenerationRequest small{0, "", 1.0, 64, 7};
  const Sample partial = backend.start_generation(small, 0);
  CHECK(partial.tokens_generated == 64);
  CHECK_FALSE(partial.finished);
  CHECK(partial.continuation.has_value());

  GenerationRequest big{0, "", 1.0, 500, 7};
  const Sample full = backend.start_generation(big, 0);
  CHECK(full.tokens_generated == 454);
  CHECK(full.finished);
  CHECK_FALSE(full.continuation.has_value());
}

TEST_CASE("continue_generation: budget arithmetic and reward stability") {
  SimBackend backend({basic_world()});
  GenerationRequest req{0, "", 1.0, 64, 7};
  const Sample first = backend.start_generation(req, 0);
  const double reward = *first.latent_reward;

  const Sample finished = backend.continue_generation(first, 390);
  CHECK(finished.tokens_generated == 454);
  CHECK(finished.finished);

  const Sample mid = backend.continue_generation(first, 64);
  CHECK(mid.tokens_generated == 128);
  CHECK_FALSE(mid.finished);
  CHECK(*mid.latent_reward == reward);

  CHECK_THROWS_AS(backend.continue_generation(finished, 10), MisuseError);
}

TEST_CASE("request validation") {
  SimBackend backend({basic_world()});
  GenerationRequest bad_temp{0, "", -0.5, 10, 1};
  CHECK_THROWS_AS(backend.start_generation(bad_temp, 0), MisuseError);
  GenerationRequest bad_budget{0, "", 1.0, 0, 1};
  CHECK_THROWS_AS(backend.start_generation(bad_budget, 0), MisuseError);
  GenerationRequest unknown{9, "", 1.0, 10, 1};
  CHECK_THROWS_AS(backend.start_generation(unknown, 0), MisuseError);
}

TEST_CASE("sim_true_score: closed form matches Monte-Carlo brute force") {
  SimWorld w = basic_world();

  // Finished sample with latent reward r.
  const struct {
    double mu, sigma, eps, r;
  } grid[] = {
      {0.0, 1.0, 0.01, 0.0},  {0.0, 1.0, 0.01, 1.3},  {0.5, 0.8, 0.05, 0.2},
      {-0.4, 1.7, 0.01, 0.9}, {1.2, 0.5, 0.10, 1.0},
  };
  std::uint64_t seed = 4242;
  for (const auto& g : grid) {
    w.mu = g.mu;
    w.sigma = g.sigma;
    w.epsilon = g.eps;
    const double analytic = sim_true_score(w, g.r, w.full_length);
    const double mc =
        mc_win_or_tie(g.r, g.mu, g.sigma, g.eps, 1'000'000, seed++);
    CHECK(std::abs(analytic - mc) <= 1e-3);
  }
}

TEST_CASE("sim_true_score: standard normal CDF anchor values") {
  SimWorld w = basic_world();
  w.mu = 0.0;
  w.sigma = 1.0;
  w.epsilon = 0.01;
  CHECK(std::abs(sim_true_score(w, 0.0, w.full_length) - 0.5040) <= 5e-5);
  CHECK(std::abs(sim_true_score(w, 1.0, w.full_length) - 0.8438) <= 5e-5);
  // Limiting case: overwhelming reward.
  CHECK(sim_true_score(w, 1e9, w.full_length) == doctest::Approx(1.0));
}

TEST_CASE("sim_true_score: t = L is the finished-sample formula") {
  SimWorld w = basic_world();
  w.mid_noise_sigma0 = 3.0;
  for (double r : {-1.0, 0.0, 0.7}) {
    const double with_noise_model = sim_true_score(w, r, w.full_length);
    SimWorld no_noise = w;
    no_noise.mid_noise_sigma0 = 0.0;
    CHECK(with_noise_model ==
          doctest::Approx(sim_true_score(no_noise, r, w.full_length)));
  }
}

TEST_CASE("sim_true_score: t = 0 with huge noise approaches the prior rate") {
  // With an uninformative observation the score forgets r entirely; with a
  // small tie threshold the prior win-or-tie rate is itself ~1/2 of the
  // paired draws, matched within the Monte-Carlo tolerance.
  SimWorld w = basic_world();
  w.epsilon = 0.0001;
  w.sigma = 1.0;
  w.mid_noise_sigma0 = 1e9;
  const double at_zero = sim_true_score(w, 0.37, 0);
  const double prior =
      mc_prior_win_or_tie(w.mu, w.sigma, w.epsilon, 1'000'000, 777);
  CHECK(std::abs(at_zero - prior) <= 1e-3);
}

TEST_CASE("sim_true_score: monotone in r, sharpening in t") {
  SimWorld w = basic_world();
  w.mid_noise_sigma0 = 1.5;

  // Strictly increasing in r for every evaluation depth, finished or not.
  for (int t : {0, 113, 454}) {
    double prev = -1.0;
    for (int i = 0; i < 100; ++i) {
      const double r = -3.0 + 6.0 * i / 99.0;
      const double s = sim_true_score(w, r, t);
      CHECK(s > prev);
      prev = s;
    }
  }

  // |score(r, t) - score(r, L)| non-increasing in t.
  for (double r : {-2.0, -0.3, 0.0, 0.9, 2.5}) {
    const double final_score = sim_true_score(w, r, w.full_length);
    double prev_gap = 1e9;
    for (int t : {0, 50, 113, 220, 410, 454}) {
      const double gap = std::abs(sim_true_score(w, r, t) - final_score);
      CHECK(gap <= prev_gap + 1e-15);
      prev_gap = gap;
    }
  }

  CHECK_THROWS_AS(sim_true_score(w, 0.0, -1), MisuseError);
  CHECK_THROWS_AS(sim_true_score(w, 0.0, w.full_length + 1), MisuseError);
}

TEST_CASE("self_evaluate: exact mode equals the analytic score") {
  SimWorld w = basic_world();
  w.calibration_mode = CalibrationMode::exact;
  SimBackend backend({w});

  GenerationRequest req{0, "", 1.0, 500, 99};
  for (int i = 0; i < 16; ++i) {
    const Sample s = backend.start_generation(req, i);
    REQUIRE(s.finished);
    const double score = scoring::normalize(backend.self_evaluate(s));
    CHECK(score == doctest::Approx(sim_true_score(
                       w, *s.latent_reward, s.tokens_generated)));
  }
}

TEST_CASE("self_evaluate: likelihoods form one token distribution") {
  SimWorld w = basic_world();
  w.calibration_mode = CalibrationMode::noisy;
  w.eval_noise_sigma = 0.8;
  w.mid_noise_sigma0 = 1.0;
  SimBackend backend({w});

  GenerationRequest req{0, "", 1.0, 64, 5};
  for (int i = 0; i < 8; ++i) {
    const Sample s = backend.start_generation(req, i);
    const EvalLikelihoods l = backend.self_evaluate(s);
    CHECK(l.p_good >= 0.0);
    CHECK(l.p_bad >= 0.0);
    CHECK(l.p_good + l.p_bad <= 1.0 + 1e-9);
  }
}

TEST_CASE("self_evaluate: mid-generation draws are stable per (sample, t)") {
  SimWorld w = basic_world();
  w.mid_noise_sigma0 = 1.0;
  SimBackend backend({w});

  GenerationRequest req{0, "", 1.0, 64, 5};
  const Sample s = backend.start_generation(req, 0);
  const double first = scoring::normalize(backend.self_evaluate(s));
  const double second = scoring::normalize(backend.self_evaluate(s));
  CHECK(first == second);
}

TEST_CASE("determinism: sample streams independent of thread count") {
  std::vector<SimWorld> worlds;
  for (int i = 0; i < 4; ++i) {
    SimWorld w = basic_world(static_cast<PromptId>(i));
    w.mu = 0.1 * i;
    worlds.push_back(w);
  }

  auto generate = [&](int threads) {
    SimBackend backend(worlds);
    std::vector<Sample> out(4 * 16);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int j = t; j < 64; j += threads) {
          GenerationRequest req{static_cast<PromptId>(j / 16), "", 1.0, 500,
                                2024};
          out[static_cast<std::size_t>(j)] =
              backend.start_generation(req, j % 16);
        }
      });
    }
    for (auto& th : pool) th.join();
    return out;
  };

  const auto one = generate(1);
  const auto eight = generate(8);
  REQUIRE(one.size() == eight.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].tokens_generated == eight[i].tokens_generated);
    CHECK(one[i].finished == eight[i].finished);
    // Bit-identical rewards, not merely close.
    const double a = *one[i].latent_reward;
    const double b = *eight[i].latent_reward;
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
  }
}

TEST_CASE("per-sample length variation stays positive and deterministic") {
  SimWorld w = basic_world();
  w.length_sigma = 100.0;
  w.full_length = 120;
  SimBackend backend({w});

  GenerationRequest req{0, "", 1.0, 1 << 20, 3};
  for (int i = 0; i < 32; ++i) {
    const Sample a = backend.start_generation(req, i);
    const Sample b = backend.start_generation(req, i);
    CHECK(a.tokens_generated == b.tokens_generated);
    CHECK(a.tokens_generated >= 1);
    CHECK(a.finished);
  }
}
