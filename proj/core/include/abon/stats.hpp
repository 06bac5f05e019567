#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "abon/rng.hpp"

namespace abon::stats {

/// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Log-odds of p, with p clamped away from {0,1} so the result stays finite.
inline double logit(double p) {
  constexpr double kEps = 1e-12;
  p = std::clamp(p, kEps, 1.0 - kEps);
  return std::log(p / (1.0 - p));
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap CI for the mean of xs. Deterministic given the seed.
inline Interval bootstrap_mean_ci(std::span<const double> xs, double alpha,
                                  int n_boot, std::uint64_t seed) {
  if (xs.empty()) return {};
  rng::Stream stream(seed);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(n_boot));
  const std::size_t n = xs.size();
  for (int b = 0; b < n_boot; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += xs[stream.uniform_int(n)];
    }
    means.push_back(s / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  auto at = [&](double q) {
    double pos = q * static_cast<double>(means.size() - 1);
    auto idx = static_cast<std::size_t>(pos);
    return means[std::min(idx, means.size() - 1)];
  };
  return {at(alpha / 2.0), at(1.0 - alpha / 2.0)};
}

}  // namespace abon::stats
