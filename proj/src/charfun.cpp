#include "ldtv/charfun.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>

#include "ldtv/core/error.hpp"
#include "ldtv/core/rng.hpp"
#include "ldtv/orthopoly.hpp"

namespace ldtv {

namespace {

const QuadratureRule& cached_rule(int m) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, gauss_hermite(m)).first;
  return it->second;
}

std::complex<double> gh_cf(const HermitePoly& p, int m) {
  const auto& rule = cached_rule(m);
  double re = 0.0, im = 0.0;
  for (int i = 0; i < m; ++i) {
    const double v = p.eval(rule.nodes[i]);
    re += rule.weights[i] * std::cos(v);
    im += rule.weights[i] * std::sin(v);
  }
  return {re, im};
}

// Gaussian mass beyond 7.1 is 1.2e-12
constexpr double kHalfWidth = 7.1;
constexpr double kOutsideMass = 1.25e-12;

// Panels on [-L, L] over which p changes phase by at most max_phase.
std::complex<double> panel_cf(const HermitePoly& p, double max_phase) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  const auto& abs = GL::abscissa();
  const auto& wts = GL::weights();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto panel = [&](double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::complex<double> s = 0.0;
    auto add = [&](double x, double w) {
      const double v = p.eval(x), g = w * std::exp(-0.5 * x * x);
      s += std::complex<double>(g * std::cos(v), g * std::sin(v));
    };
    // boost stores the non-negative half; node 0 is the centre for odd orders only
    for (std::size_t i = 0; i < abs.size(); ++i) {
      if (abs[i] == 0.0) {
        add(c, wts[i]);
      } else {
        add(c + h * abs[i], wts[i]);
        add(c - h * abs[i], wts[i]);
      }
    }
    return s * h * norm;
  };
  std::complex<double> total = 0.0;
  double x = -kHalfWidth;
  while (x < kHalfWidth) {
    double h = std::min(0.25, kHalfWidth - x);
    for (int it = 0; it < 4; ++it) {
      const double d = std::max({std::fabs(p.derivative(x)), std::fabs(p.derivative(x + 0.5 * h)),
                                 std::fabs(p.derivative(x + h))});
      if (d * h <= max_phase) break;
      h = max_phase / d;
    }
    total += panel(x, x + h);
    x += h;
  }
  return total;
}

}  // namespace

HermitePoly HermitePoly::from_monomials(std::span<const double> a) {
  require(!a.empty(), "HermitePoly: no coefficients");
  const int d = int(a.size()) - 1;
  const auto& rule = cached_rule(d + 2);
  HermitePoly p;
  p.coeffs.assign(d + 1, 0.0);
  std::vector<double> h(d + 1);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    double v = 0.0;
    for (int j = d; j >= 0; --j) v = v * x + a[j];
    hermite_values(x, h);
    for (int j = 0; j <= d; ++j) p.coeffs[j] += rule.weights[i] * v * h[j];
  }
  return p;
}

double HermitePoly::eval(double x) const {
  if (coeffs.empty()) return 0.0;
  // forward recurrence without storing the values
  double prev = 1.0, cur = x, s = coeffs[0];
  if (coeffs.size() > 1) s += coeffs[1] * x;
  for (std::size_t j = 1; j + 1 < coeffs.size(); ++j) {
    const double next = (x * cur - std::sqrt(double(j)) * prev) / std::sqrt(double(j + 1));
    prev = cur;
    cur = next;
    s += coeffs[j + 1] * cur;
  }
  return s;
}

double HermitePoly::derivative(double x) const {
  // h_{j-1} runs along with the sum
  double prev = 0.0, cur = 1.0, s = 0.0;
  for (std::size_t j = 1; j < coeffs.size(); ++j) {
    s += coeffs[j] * std::sqrt(double(j)) * cur;
    const double next = (x * cur - std::sqrt(double(j - 1)) * prev) / std::sqrt(double(j));
    prev = cur;
    cur = next;
  }
  return s;
}

double HermitePoly::variance() const {
  double v = 0.0;
  for (std::size_t j = 1; j < coeffs.size(); ++j) v += coeffs[j] * coeffs[j];
  return v;
}

HermitePoly HermitePoly::negated() const {
  HermitePoly q = *this;
  for (auto& c : q.coeffs) c = -c;
  return q;
}

CfResult poly_cf(const HermitePoly& p, int nodes) {
  require(nodes >= 64, "poly_cf: need at least 64 nodes");
  CfResult r;
  const auto a = gh_cf(p, nodes), b = gh_cf(p, 2 * nodes);
  r.nodes = 2 * nodes;
  r.value = b;
  r.error_estimate = std::abs(a - b);
  if (r.error_estimate > 1e-6) {
    r.gh_nonconverged = true;
    r.used_fallback = true;
    // 20-point rules resolve 8 radians of phase per panel to ~1e-24
    const auto c = panel_cf(p, 16.0), d = panel_cf(p, 8.0);
    r.value = d;
    r.error_estimate = std::abs(c - d) + kOutsideMass;
  }
  return r;
}

CfRegimeReport verify_cf_regimes(const HermitePoly& p, const CfRegimeOptions& opts) {
  const int k = p.degree();
  require(k >= 1 && k <= 8, "verify_cf_regimes: degree must lie in [1,8]");
  CfRegimeReport rep;
  rep.degree = k;
  rep.variance = p.variance();
  const double V = rep.variance;
  const double small = std::pow(9.0, -k);
  const double large = std::pow(double(k), opts.large_C * k);
  if (V <= small) {
    rep.regime = 1;
    rep.bound = 1.0 - V / 4.0;
  } else if (V >= large) {
    rep.regime = 3;
    rep.bound = std::min(1.0, opts.c_prime * std::pow(V, -1.0 / (4.0 * k)));
  } else {
    rep.regime = 2;
    rep.bound = 1.0 - opts.kappa * std::min(V, 1.0 / V) / k;
  }
  const auto cf = poly_cf(p, opts.nodes);
  rep.observed = std::abs(cf.value);
  rep.error_estimate = cf.error_estimate;
  rep.pass = rep.observed <= rep.bound + 1e-9;
  return rep;
}

HermitePoly random_hermite_poly(int k, double variance, std::uint64_t seed, std::uint64_t index) {
  require(k >= 1, "random_hermite_poly: k must be >= 1");
  require(variance >= 0.0, "random_hermite_poly: negative variance");
  CounterRng rng(seed, Stream::kCorpus, index);
  HermitePoly p;
  p.coeffs.assign(k + 1, 0.0);
  double s = 0.0;
  do {
    s = 0.0;
    for (int j = 1; j <= k; ++j) {
      p.coeffs[j] = rng.normal();
      s += p.coeffs[j] * p.coeffs[j];
    }
  } while (s == 0.0);
  const double f = std::sqrt(variance / s);
  for (int j = 1; j <= k; ++j) p.coeffs[j] *= f;
  return p;
}

CfFit fit_cf_constants(const std::vector<HermitePoly>& corpus, const CfRegimeOptions& opts) {
  CfFit fit;
  fit.kappa = INFINITY;
  for (const auto& p : corpus) {
    auto rep = verify_cf_regimes(p, opts);
    const double V = rep.variance;
    const int k = rep.degree;
    if (rep.regime == 2) {
      ++fit.regime2;
      fit.kappa = std::min(fit.kappa, (1.0 - rep.observed) * k / std::min(V, 1.0 / V));
    } else if (rep.regime == 3) {
      ++fit.regime3;
      fit.c_prime = std::max(fit.c_prime, rep.observed * std::pow(V, 1.0 / (4.0 * k)));
    }
  }
  if (fit.regime2 == 0) fit.kappa = 0.0;
  return fit;
}

void write_cf_corpus_csv(std::ostream& os, const std::vector<HermitePoly>& corpus,
                         const std::vector<CfRegimeReport>& reports) {
  require(corpus.size() == reports.size(), "write_cf_corpus_csv: size mismatch");
  int K = 0;
  for (const auto& p : corpus) K = std::max(K, p.degree());
  for (int j = 0; j <= K; ++j) os << 'c' << j << ',';
  os << "variance,regime,bound,observed\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (int j = 0; j <= K; ++j) os << (j <= corpus[i].degree() ? corpus[i].coeffs[j] : 0.0) << ',';
    const auto& r = reports[i];
    os << r.variance << ',' << r.regime << ',' << r.bound << ',' << r.observed << '\n';
  }
  os.precision(old);
}

}  // namespace ldtv
