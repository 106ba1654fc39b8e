#pragma once

// E[exp(i p(g))] for a univariate polynomial p of a standard Gaussian g,
// and checks of the three variance regimes bounding |E exp(i p(g))|.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ldtv {

/// p(x) = sum_j c_j h_j(x) in the normalized Hermite basis.
struct HermitePoly {
  std::vector<double> coeffs;

  /// Monomial coefficients a_0 + a_1 x + ... converted exactly (by
  /// Gauss-Hermite projection).
  static HermitePoly from_monomials(std::span<const double> a);

  int degree() const { return int(coeffs.size()) - 1; }
  double eval(double x) const;
  /// p'(x) = sum_j c_j sqrt(j) h_{j-1}(x).
  double derivative(double x) const;
  double mean() const { return coeffs.empty() ? 0.0 : coeffs[0]; }
  double variance() const;
  HermitePoly negated() const;
};

struct CfResult {
  std::complex<double> value;
  /// |GH(m) - GH(2m)|, or the panel-refinement difference after a fallback.
  double error_estimate = 0.0;
  int nodes = 0;
  /// Gauss-Hermite doubling moved the value by more than 1e-6.
  bool gh_nonconverged = false;
  bool used_fallback = false;
};

/// Gauss-Hermite quadrature with `nodes` and 2 * nodes points; if they
/// disagree, falls back to Gauss-Legendre panels sized to the local
/// oscillation on [-7.1, 7.1] (the Gaussian mass outside, 1.2e-12, is added to the
/// error estimate).
CfResult poly_cf(const HermitePoly& p, int nodes = 400);

struct CfRegimeOptions {
  /// Regime 3 threshold: Var >= k^{C k}.
  double large_C = 2.0;
  /// Regime 2 bound 1 - kappa min(Var, 1/Var) / k.
  double kappa = 1.0 / 16.0;
  /// Regime 3 bound C' Var^{-1/(4k)}.
  double c_prime = 1.0;
  int nodes = 400;
};

struct CfRegimeReport {
  int degree = 0;
  double variance = 0.0;
  int regime = 0;  // 1: Var <= 9^{-k}; 3: Var >= k^{C k}; 2 otherwise
  double bound = 0.0;
  double observed = 0.0;  // |E exp(i p(g))|
  double error_estimate = 0.0;
  bool pass = false;  // observed <= bound + 1e-9
};

/// degree k is taken as coeffs.size() - 1, which must lie in [1, 8].
CfRegimeReport verify_cf_regimes(const HermitePoly& p, const CfRegimeOptions& opts = {});

/// c_0 = 0 and (c_1..c_k) uniform on the sphere of radius sqrt(variance).
HermitePoly random_hermite_poly(int k, double variance, std::uint64_t seed, std::uint64_t index);

struct CfFit {
  double kappa = 0.0;    // min over regime-2 polys of (1 - |cf|) k / min(V, 1/V)
  double c_prime = 0.0;  // max over regime-3 polys of |cf| V^{1/(4k)}
  int regime2 = 0, regime3 = 0;
};

/// Phase one of the constant protocol: fit on a frozen corpus.
CfFit fit_cf_constants(const std::vector<HermitePoly>& corpus, const CfRegimeOptions& opts = {});

/// Columns c0..c{K},variance,regime,bound,observed; K is the largest degree.
void write_cf_corpus_csv(std::ostream& os, const std::vector<HermitePoly>& corpus,
                         const std::vector<CfRegimeReport>& reports);

}  // namespace ldtv
