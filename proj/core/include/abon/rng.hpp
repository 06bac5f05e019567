#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace abon::rng {

/// splitmix64 finalizer. Good avalanche, cheap, stable across platforms.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a key tuple into one 64-bit stream id.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) {
    h = mix64(h ^ mix64(p));
  }
  return h;
}

/// FNV-1a, used to key streams off string identifiers.
inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h = (h ^ c) * 0x100000001b3ULL;
  }
  return h;
}

// Stream purposes. Every random decision in the engine draws from a stream
// keyed by (seed, prompt, sample, purpose, ...) so results never depend on
// execution order or thread count.
namespace purpose {
inline constexpr std::uint64_t kLatentReward = 1;
inline constexpr std::uint64_t kSampleLength = 2;
inline constexpr std::uint64_t kEvalObservation = 3;
inline constexpr std::uint64_t kEvalLogitNoise = 4;
inline constexpr std::uint64_t kPruneRandom = 5;
inline constexpr std::uint64_t kTruncationPoint = 6;
inline constexpr std::uint64_t kWorkload = 7;
inline constexpr std::uint64_t kSelectorRandom = 8;
inline constexpr std::uint64_t kSyntheticPair = 9;
}  // namespace purpose

/// One independent, deterministic random stream.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : engine_(key) {}
  Stream(std::initializer_list<std::uint64_t> parts)
      : engine_(stream_key(parts)) {}

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace abon::rng
