#pragma once

// Orthonormal polynomial families used throughout the library: normalized
// probabilist's Hermite polynomials (orthonormal for N(0,1)) and shifted
// Krawtchouk polynomials (orthonormal for the centered, normalized binomial
// weight law).

#include <iosfwd>
#include <span>
#include <vector>

namespace ldtv {

// ---------------------------------------------------------------------------
// Hermite

/// h_k(x) = He_k(x) / sqrt(k!), evaluated by the stable three-term recurrence
/// h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1).
double hermite(int k, double x);

/// Writes h_0(x) .. h_{out.size()-1}(x).
void hermite_values(double x, std::span<double> out);

/// Same in extended precision; used where values exceed double range.
void hermite_values_ld(long double x, std::span<long double> out);

class HermiteBasis {
 public:
  explicit HermiteBasis(int max_degree);

  int max_degree() const { return max_degree_; }
  double eval(int k, double x) const;
  /// h_k'(x) = sqrt(k) h_{k-1}(x).
  double derivative(int k, double x) const;
  std::vector<double> values(double x) const;

 private:
  int max_degree_;
};

/// Quadrature rule for E_{g ~ N(0,1)}[f(g)] ~= sum_i w_i f(x_i).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sums to 1

  template <class F>
  auto integrate(F&& f) const {
    decltype(f(0.0)) acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// m-point Gauss-Hermite rule for the standard normal weight. Exact for
/// polynomials of degree <= 2m - 1. Nodes from the Jacobi matrix, polished by
/// Newton steps; weights from the Christoffel function.
QuadratureRule gauss_hermite(int m);

// ---------------------------------------------------------------------------
// Weight law

/// Exact law of the weight w (number of +1 coordinates) of a symmetric
/// Boolean string, together with the affine map w -> y = (w - gamma n) /
/// sqrt(n gamma (1 - gamma)) that centers and normalizes it under the null.
class WeightLaw {
 public:
  /// Binomial(n, p) pmf with the y-map of parameter gamma.
  static WeightLaw binomial(int n, double gamma, double p);
  /// Arbitrary pmf on {0..n}; must be nonnegative and sum to 1 within 1e-9
  /// (it is renormalized exactly).
  static WeightLaw from_pmf(int n, double gamma, std::vector<double> pmf);

  int n() const { return n_; }
  double gamma() const { return gamma_; }
  std::span<const double> pmf() const { return pmf_; }
  double prob(int w) const { return pmf_.at(static_cast<std::size_t>(w)); }
  double y_of(int w) const { return (w - gamma_ * n_) / scale_; }
  /// sqrt(n gamma (1 - gamma)).
  double scale() const { return scale_; }
  /// E[y^p].
  double moment(int p) const;
  double total_mass() const;

 private:
  WeightLaw(int n, double gamma, std::vector<double> pmf);

  int n_;
  double gamma_;
  double scale_;
  std::vector<double> pmf_;
};

/// Null weight law Binomial(n, gamma).
WeightLaw make_weight_law(int n, double gamma);

/// Binomial(n, p) pmf computed by ratio recursion from the mode and
/// normalized in extended precision. Entries below the double range are 0.
std::vector<double> binomial_pmf(int n, double p);

// ---------------------------------------------------------------------------
// Krawtchouk

/// Shifted Krawtchouk family Kr_0..Kr_kmax for (n, gamma): the orthonormal
/// polynomials in y for the null weight law. Represented by three-term
/// recurrence coefficients
///   y Kr_k = b_{k+1} Kr_{k+1} + a_k Kr_k + b_k Kr_{k-1},
/// held in extended precision. Immutable after construction.
class KrawtchoukBasis {
 public:
  /// Closed-form Jacobi coefficients of the binomial weight:
  /// a_k = k (1 - 2 gamma) / sqrt(n gamma (1-gamma)), b_k^2 = k (n-k+1) / n.
  KrawtchoukBasis(int n, double gamma, int max_degree = -1);

  /// Discretized Stieltjes (Gram-Schmidt on y * Kr_k) against an explicit law.
  static KrawtchoukBasis from_law(const WeightLaw& law, int max_degree);

  int n() const { return n_; }
  double gamma() const { return gamma_; }
  int max_degree() const { return max_degree_; }

  /// Kr_k(y) at any real y. Throws for k > max_degree.
  double eval(int k, double y) const;
  /// Kr_0(y) .. Kr_{out.size()-1}(y) in extended precision.
  void values(double y, std::span<long double> out) const;
  /// Same at the support point y(w), with y and the recurrence carried in
  /// binary128. The forward recurrence loses accuracy where Kr_k decays in
  /// k (gamma != 1/2, large k); for the closed-form basis and degrees above
  /// a cutoff near sqrt(n min(gamma, 1-gamma)) the values are stitched with a reflected recurrence.
  /// That costs O(n) per call instead of O(k).
  void support_values(int w, std::span<long double> out) const;

  std::span<const long double> shifts() const { return a_; }
  std::span<const long double> norms() const { return b_; }

  /// Monomial coefficients c_0..c_k of Kr_k(y) = sum c_j y^j. Cancellation
  /// grows with k; intended for export and cross-checking at moderate degree.
  std::vector<long double> monomial_coefficients(int k) const;

  /// CSV rows "degree,c0,c1,...,ck" for degrees 0..max_k.
  void write_csv(std::ostream& os, int max_k) const;

 private:
  KrawtchoukBasis(int n, double gamma, std::vector<long double> a,
                  std::vector<long double> b);

  int n_;
  double gamma_;
  void forward_q(int w, std::size_t count, std::span<__float128> out) const;

  int max_degree_;
  bool binomial_ = true;  // closed-form coefficients, reflection applies
  int reflect_from_ = 0;
  std::vector<long double> a_;  // a_0 .. a_{kmax}
  std::vector<long double> b_;  // b_0 (unused, 0) .. b_{kmax}
  std::vector<__float128> aq_, bq_, inv_bq_;
  __float128 scale_q_ = 1;
};

struct KrawtchoukBoundReport {
  int degree = 0;
  double max_ratio = 0.0;  // max |Kr_k(y)| k^{-1/4} e^{-y^2/4}
  double argmax_y = 0.0;
  double constant = 3.0;
  bool below_constant = true;
  /// False if k > n/2 or some grid point has |y| > n^{1/6}/2; the check still
  /// runs.
  bool within_validity = true;
};

KrawtchoukBoundReport verify_krawtchouk_bound(const KrawtchoukBasis& basis,
                                              int k,
                                              std::span<const double> y_grid,
                                              double constant = 3.0);

/// Evenly spaced grid of `points` values on [-half_width, half_width].
std::vector<double> symmetric_grid(double half_width, int points);

}  // namespace ldtv
