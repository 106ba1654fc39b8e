#pragma once

#include <cmath>
#include <cstdint>

namespace ldtv {

/// A Monte Carlo (or exact, with stderr 0) numeric result.
struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;

  /// |value - target| <= k * stderr (with a tiny absolute floor for exact
  /// results).
  bool within(double target, double k = 3.0) const {
    return std::abs(value - target) <= k * std_err + 1e-12;
  }
};

/// Streaming mean/variance with Chan's parallel merge.
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  static Moments merge(Moments a, const Moments& b) {
    if (b.count == 0) return a;
    if (a.count == 0) return b;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double delta = b.mean - a.mean;
    const double n = na + nb;
    a.mean += delta * nb / n;
    a.m2 += b.m2 + delta * delta * na * nb / n;
    a.count += b.count;
    return a;
  }

  double variance() const {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double stderr_of_mean() const {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count))
                     : 0.0;
  }
  Estimate estimate(std::uint64_t seed = 0) const {
    return {mean, stderr_of_mean(), count, seed};
  }
};

}  // namespace ldtv
