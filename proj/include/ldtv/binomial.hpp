#pragma once

// Weight-space pipeline for symmetric Boolean laws: truncation to a window
// |y| <= tau, damped Krawtchouk coefficients, a certified TV upper bound
// between the null and the noised planted law, and exact oracles.
// Everything here is pmf enumeration; n above kMaxEnumerableN is refused.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ldtv/orthopoly.hpp"

namespace ldtv {

inline constexpr int kMaxEnumerableN = 4096;

/// 2 sqrt(log n).
double default_tau(int n);
/// (4 / eps) log n.
double default_T(int n, double eps);

struct TruncationReport {
  double tau = 0.0;
  double mass_dropped = 0.0;
  WeightLaw law;  // pi conditioned on |y| <= tau
};

TruncationReport truncate(const WeightLaw& pi, double tau);

struct BoundComponents {
  double low = 0.0;           // sum over 1 <= l <= min(T, D) of (1-eps)^{2l} a_l^2
  double mid = 0.0;           // same sum over T < l <= D
  double tail = 0.0;          // bound on the l > D part
  double mass_dropped = 0.0;  // TV(pi, pi-bar)
};

struct CertifiedBound {
  double chi2_noisy_truncated = 0.0;  // low + mid + tail
  double tv_bound = 0.0;              // sqrt(chi2)/2 + mass_dropped
  BoundComponents components;
  double eps = 0.0;
  int D = 0;  // requested degree
  double tau = 0.0;
  double T = 0.0;
  /// Highest degree actually summed. Below D only when a coefficient came
  /// out non-finite; the tail then starts at degree_used + 1.
  int degree_used = 0;
  bool degree_capped = false;
  std::string cap_reason;
  /// chi2(pi-bar || nu), exact.
  double chi2_truncated = 0.0;
};

struct BoundOptions {
  double tau = std::numeric_limits<double>::quiet_NaN();  // NaN: default_tau
  double T = std::numeric_limits<double>::quiet_NaN();    // NaN: default_T
};

/// Upper bound on TV(nu, T_eps pi). The basis must have degree >= D.
CertifiedBound certified_tv_bound(const WeightLaw& pi, double eps, int D,
                                  const KrawtchoukBasis& basis, const BoundOptions& opts = {});

/// (1/2) sum_w |p(w) - q(w)|.
double exact_tv(const WeightLaw& p, const WeightLaw& q);

struct TailRow {
  double t = 0.0;
  double tail = 0.0;      // Pr_pi[|y| >= t]
  double envelope = 0.0;  // (delta + 2^{-t^2/4}) e^{-t^2/4}
  double ratio = 0.0;     // tail / envelope
  bool violation = false;
};

struct TailProbeReport {
  double delta = 0.0;  // sqrt(chi2_D(pi || nu))
  int D = 0;
  double constant = 0.0;  // threshold used for flagging
  double fitted_constant = 0.0;  // max ratio over the grid
  std::vector<TailRow> rows;
  int violations = 0;
};

/// Compares Pr[|y| >= t] against constant * envelope(t). Requires t <= sqrt(D).
TailProbeReport tail_probe(const WeightLaw& pi, const KrawtchoukBasis& basis, int D,
                           const std::vector<double>& t_grid, double constant = 1.0);

struct TruncatedCoeffProbe {
  double tau = 0.0;
  double mass_dropped = 0.0;
  double delta = 0.0;  // sqrt(chi2_D(pi || nu))
  /// |E_pi[Kr_l 1(|y| <= tau)]|, l = 0..D.
  std::vector<double> coeff;
  /// sqrt(mass_dropped * E_pi[Kr_l^2]): Cauchy-Schwarz bound on how far
  /// coeff[l] can sit from |E_pi[Kr_l]|.
  std::vector<double> cs_bound;
  /// max_{l >= 1} coeff[l] / (delta l^{5/4}); infinite if delta = 0.
  double fitted_C = 0.0;
  /// Least-squares slope of log coeff[l] against log l over positive entries.
  double growth_exponent = 0.0;
  /// delta < n^{-1/2}: outside the regime the growth bound is stated for.
  bool below_validity = false;
};

TruncatedCoeffProbe truncated_coeff_probe(const WeightLaw& pi, const KrawtchoukBasis& basis,
                                          double tau, int D);

struct SweepRow {
  int n = 0;
  double gamma = 0.0;
  double eps = 0.0;
  int D = 0;
  double delta = 0.0;
  double bound = 0.0;
  double exact_tv = 0.0;
  double mass_dropped = 0.0;
  std::uint64_t seed = 0;
};

/// One row per eps: certified bound and exact TV(nu, T_eps pi) at fixed D.
/// delta is sqrt(chi2_D(pi || nu)).
std::vector<SweepRow> binomial_sweep(const WeightLaw& pi, const std::vector<double>& eps_grid,
                                     int D, std::uint64_t seed = 0,
                                     const BoundOptions& opts = {});

/// Header n,gamma,eps,D,delta,bound,exact_tv,mass_dropped,seed.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool header = true);

}  // namespace ldtv
