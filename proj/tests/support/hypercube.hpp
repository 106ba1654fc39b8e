#pragma once

// Brute-force oracles on {0,1}^n (bit 1 = +1 coordinate), independent of the
// weight-space convolution in the library.

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ldtv::testing {

inline double binom_coeff(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

/// String law that is uniform on each weight level.
inline std::vector<long double> symmetric_string_law(int n, const std::vector<double>& pmf) {
  std::vector<long double> p(std::size_t(1) << n);
  for (std::uint32_t x = 0; x < p.size(); ++x) {
    const int w = std::popcount(x);
    p[x] = pmf[w] / std::round(binom_coeff(n, w));
  }
  return p;
}

/// Each coordinate independently resampled from Bernoulli(gamma) w.p. eps.
inline void apply_noise_exact(std::vector<long double>& p, int n, double eps, double gamma) {
  for (int i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t x = 0; x < p.size(); ++x) {
      if (x & bit) continue;
      const long double p0 = p[x], p1 = p[x | bit];
      const long double m = p0 + p1;
      p[x] = (1.0L - eps) * p0 + eps * (1.0L - gamma) * m;
      p[x | bit] = (1.0L - eps) * p1 + eps * gamma * m;
    }
  }
}

inline std::vector<double> weight_marginal(const std::vector<long double>& p, int n) {
  std::vector<long double> acc(n + 1, 0.0L);
  for (std::uint32_t x = 0; x < p.size(); ++x) acc[std::popcount(x)] += p[x];
  return {acc.begin(), acc.end()};
}

}  // namespace ldtv::testing
