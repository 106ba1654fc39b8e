#include "ldtv/binomial.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "ldtv/core/error.hpp"
#include "ldtv/ldlr.hpp"
#include "ldtv/models.hpp"

namespace ldtv {

namespace {

void require_enumerable(int n, const char* who) {
  if (n > kMaxEnumerableN)
    throw InvalidArgument(std::string(who) + ": n above " + std::to_string(kMaxEnumerableN) +
                          " is not enumerated");
}

void require_same_space(const WeightLaw& p, const WeightLaw& q, const char* who) {
  if (p.n() != q.n() || p.gamma() != q.gamma())
    throw InvalidArgument(std::string(who) + ": laws live on different weight spaces");
}

double sqrt_chi2_D(const WeightLaw& pi, const KrawtchoukBasis& basis, int D) {
  return std::sqrt(chi2_sym_boolean(pi, basis, D).chi2);
}

}  // namespace

double default_tau(int n) { return 2.0 * std::sqrt(std::log(double(n))); }

double default_T(int n, double eps) { return 4.0 / eps * std::log(double(n)); }

TruncationReport truncate(const WeightLaw& pi, double tau) {
  require_enumerable(pi.n(), "truncate");
  if (!(tau > 0.0)) throw InvalidArgument("truncate: tau must be positive");
  const int n = pi.n();
  std::vector<double> pmf(n + 1, 0.0);
  long double kept = 0.0L, dropped = 0.0L;
  for (int w = 0; w <= n; ++w) {
    if (std::fabs(pi.y_of(w)) <= tau) {
      pmf[w] = pi.prob(w);
      kept += pi.prob(w);
    } else {
      dropped += pi.prob(w);
    }
  }
  if (kept <= 0.0L) throw NumericalError("truncate: window |y| <= tau carries no mass");
  for (double& p : pmf) p = double(p / kept);
  // dropped is summed directly so tiny tails do not vanish into 1 - kept
  TruncationReport rep{tau, double(dropped / (kept + dropped)),
                       WeightLaw::from_pmf(n, pi.gamma(), std::move(pmf))};
  return rep;
}

CertifiedBound certified_tv_bound(const WeightLaw& pi, double eps, int D,
                                  const KrawtchoukBasis& basis, const BoundOptions& opts) {
  const int n = pi.n();
  require_enumerable(n, "certified_tv_bound");
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("certified_tv_bound: eps must lie in (0,1]");
  if (D < 0 || D > n) throw InvalidArgument("certified_tv_bound: D must lie in [0,n]");
  require(basis.n() == n && basis.gamma() == pi.gamma(), "certified_tv_bound: basis mismatch");

  CertifiedBound out;
  out.eps = eps;
  out.D = D;
  out.tau = std::isnan(opts.tau) ? default_tau(n) : opts.tau;
  out.T = std::isnan(opts.T) ? default_T(n, eps) : opts.T;

  auto tr = truncate(pi, out.tau);
  const auto nu = make_weight_law(n, pi.gamma());
  out.chi2_truncated = chi2_full(tr.law, nu);
  out.components.mass_dropped = tr.mass_dropped;

  const auto a = krawtchouk_coefficients(tr.law, basis, D);
  int used = D;
  for (int l = 1; l <= D; ++l) {
    if (!std::isfinite(double(a[l]))) {
      used = l - 1;
      out.degree_capped = true;
      out.cap_reason = "non-finite Krawtchouk coefficient at degree " + std::to_string(l);
      break;
    }
  }
  out.degree_used = used;

  const long double damp = (1.0L - eps) * (1.0L - eps);
  long double low = 0.0L, mid = 0.0L, raw = 0.0L, w = 1.0L;
  for (int l = 1; l <= used; ++l) {
    w *= damp;
    const long double term = w * a[l] * a[l];
    raw += a[l] * a[l];
    if (l <= out.T) low += term;
    else mid += term;
  }
  long double tail = 0.0L;
  if (used < n) {
    // Parseval on the truncated law: sum_{l > used} a_l^2 = chi2 - sum_{l <= used} a_l^2,
    // each damped by at least (1-eps)^{2(used+1)}.
    const long double rest = std::max(0.0L, (long double)out.chi2_truncated - raw);
    tail = w * damp * rest;
    if (!std::isfinite(out.chi2_truncated)) tail = INFINITY;
  }
  out.components.low = double(low);
  out.components.mid = double(mid);
  out.components.tail = double(tail);
  out.chi2_noisy_truncated = double(low + mid + tail);
  out.tv_bound = 0.5 * std::sqrt(out.chi2_noisy_truncated) + tr.mass_dropped;
  return out;
}

double exact_tv(const WeightLaw& p, const WeightLaw& q) {
  require_same_space(p, q, "exact_tv");
  require_enumerable(p.n(), "exact_tv");
  long double s = 0.0L;
  for (int w = 0; w <= p.n(); ++w) s += std::fabs((long double)p.prob(w) - q.prob(w));
  return double(0.5L * s);
}

TailProbeReport tail_probe(const WeightLaw& pi, const KrawtchoukBasis& basis, int D,
                           const std::vector<double>& t_grid, double constant) {
  require_enumerable(pi.n(), "tail_probe");
  TailProbeReport rep;
  rep.D = D;
  rep.constant = constant;
  rep.delta = sqrt_chi2_D(pi, basis, D);
  for (double t : t_grid) {
    require(t >= 0.0 && t <= std::sqrt(double(D)) + 1e-12, "tail_probe: need 0 <= t <= sqrt(D)");
    long double tail = 0.0L;
    for (int w = 0; w <= pi.n(); ++w)
      if (std::fabs(pi.y_of(w)) >= t) tail += pi.prob(w);
    TailRow row;
    row.t = t;
    row.tail = double(tail);
    const double g = std::exp(-t * t / 4.0);
    row.envelope = (rep.delta + std::pow(2.0, -t * t / 4.0)) * g;
    row.ratio = row.tail / row.envelope;
    row.violation = row.ratio > constant;
    rep.violations += row.violation;
    rep.fitted_constant = std::max(rep.fitted_constant, row.ratio);
    rep.rows.push_back(row);
  }
  return rep;
}

TruncatedCoeffProbe truncated_coeff_probe(const WeightLaw& pi, const KrawtchoukBasis& basis,
                                          double tau, int D) {
  const int n = pi.n();
  require_enumerable(n, "truncated_coeff_probe");
  require(tau > 0.0, "truncated_coeff_probe: tau must be positive");
  require(D >= 0 && D <= basis.max_degree(), "truncated_coeff_probe: D exceeds basis degree");
  TruncatedCoeffProbe out;
  out.tau = tau;
  out.delta = sqrt_chi2_D(pi, basis, D);
  out.below_validity = out.delta < 1.0 / std::sqrt(double(n));

  std::vector<long double> inside(D + 1, 0.0L), second(D + 1, 0.0L), v(D + 1);
  long double dropped = 0.0L;
  for (int w = 0; w <= n; ++w) {
    const double p = pi.prob(w);
    if (p == 0.0) continue;
    basis.support_values(w, v);
    const bool in = std::fabs(pi.y_of(w)) <= tau;
    if (!in) dropped += p;
    for (int l = 0; l <= D; ++l) {
      if (in) inside[l] += p * v[l];
      second[l] += p * v[l] * v[l];
    }
  }
  out.mass_dropped = double(dropped);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int l = 0; l <= D; ++l) {
    out.coeff.push_back(double(std::fabs(inside[l])));
    out.cs_bound.push_back(double(std::sqrt(dropped * second[l])));
    if (l == 0) continue;
    const double c = out.coeff.back();
    out.fitted_C = std::max(out.fitted_C, out.delta > 0.0 ? c / (out.delta * std::pow(l, 1.25))
                                                          : (c > 0.0 ? INFINITY : 0.0));
    if (c > 0.0) {
      const double x = std::log(double(l)), y = std::log(c);
      sx += x, sy += y, sxx += x * x, sxy += x * y, ++cnt;
    }
  }
  if (cnt >= 2) {
    const double den = cnt * sxx - sx * sx;
    out.growth_exponent = den > 0.0 ? (cnt * sxy - sx * sy) / den : 0.0;
  }
  return out;
}

std::vector<SweepRow> binomial_sweep(const WeightLaw& pi, const std::vector<double>& eps_grid,
                                     int D, std::uint64_t seed, const BoundOptions& opts) {
  const int n = pi.n();
  require_enumerable(n, "binomial_sweep");
  KrawtchoukBasis basis(n, pi.gamma(), D);
  const auto nu = make_weight_law(n, pi.gamma());
  const double delta = sqrt_chi2_D(pi, basis, D);
  std::vector<SweepRow> rows;
  for (double eps : eps_grid) {
    auto b = certified_tv_bound(pi, eps, D, basis, opts);
    SweepRow r;
    r.n = n;
    r.gamma = pi.gamma();
    r.eps = eps;
    r.D = D;
    r.delta = delta;
    r.bound = b.tv_bound;
    r.exact_tv = exact_tv(nu, noisy_weight_law(pi, eps, pi.gamma()));
    r.mass_dropped = b.components.mass_dropped;
    r.seed = seed;
    rows.push_back(r);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool header) {
  if (header) os << "n,gamma,eps,D,delta,bound,exact_tv,mass_dropped,seed\n";
  const auto old = os.precision(17);
  for (const auto& r : rows)
    os << r.n << ',' << r.gamma << ',' << r.eps << ',' << r.D << ',' << r.delta << ','
       << r.bound << ',' << r.exact_tv << ',' << r.mass_dropped << ',' << r.seed << '\n';
  os.precision(old);
}

}  // namespace ldtv
