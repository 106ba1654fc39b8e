#include "ldtv/orthopoly.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <quadmath.h>

#include "ldtv/core/error.hpp"

namespace ldtv {

double hermite(int k, double x) {
  require(k >= 0, "hermite: negative degree");
  if (k == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int j = 1; j < k; ++j) {
    double next = (x * cur - std::sqrt(double(j)) * prev) / std::sqrt(double(j + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_values(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t j = 1; j + 1 < out.size(); ++j)
    out[j + 1] = (x * out[j] - std::sqrt(double(j)) * out[j - 1]) / std::sqrt(double(j + 1));
}

void hermite_values_ld(long double x, std::span<long double> out) {
  if (out.empty()) return;
  out[0] = 1.0L;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t j = 1; j + 1 < out.size(); ++j)
    out[j + 1] = (x * out[j] - std::sqrt((long double)j) * out[j - 1]) /
                 std::sqrt((long double)(j + 1));
}

HermiteBasis::HermiteBasis(int max_degree) : max_degree_(max_degree) {
  require(max_degree >= 0, "HermiteBasis: negative degree");
}

double HermiteBasis::eval(int k, double x) const {
  require(k <= max_degree_, "HermiteBasis: degree above max_degree");
  return hermite(k, x);
}

double HermiteBasis::derivative(int k, double x) const {
  require(k <= max_degree_, "HermiteBasis: degree above max_degree");
  return k == 0 ? 0.0 : std::sqrt(double(k)) * hermite(k - 1, x);
}

std::vector<double> HermiteBasis::values(double x) const {
  std::vector<double> v(max_degree_ + 1);
  hermite_values(x, v);
  return v;
}

QuadratureRule gauss_hermite(int m) {
  require(m >= 1, "gauss_hermite: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  if (m == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
    return rule;
  }
  // Jacobi matrix of the probabilist's Hermite weight: zero diagonal,
  // off-diagonal sqrt(k).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(m - 1);
  for (int k = 1; k < m; ++k) sub[k - 1] = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigen solve failed");
  Eigen::VectorXd ev = es.eigenvalues();

  std::vector<long double> h(m + 1);
  const int half = m / 2;
  for (int i = 0; i < m; ++i) {
    // polish the non-negative half, mirror the rest
    if (i < half) continue;
    long double x = ev[i];
    if (m % 2 == 1 && i == half) x = 0.0L;
    for (int it = 0; it < 8; ++it) {
      hermite_values_ld(x, h);
      long double dx = h[m] / (std::sqrt((long double)m) * h[m - 1]);
      x -= dx;
      if (std::fabs(dx) <= 1e-19L * std::max(1.0L, std::fabs(x))) break;
    }
    hermite_values_ld(x, h);
    long double s = 0.0L;
    for (int j = 0; j < m; ++j) s += h[j] * h[j];
    rule.nodes[i] = double(x);
    rule.weights[i] = double(1.0L / s);
    rule.nodes[m - 1 - i] = -double(x);
    rule.weights[m - 1 - i] = double(1.0L / s);
  }
  if (m % 2 == 1) rule.nodes[half] = 0.0;
  return rule;
}

// ---------------------------------------------------------------------------

std::vector<double> binomial_pmf(int n, double p) {
  require(n >= 0, "binomial_pmf: negative n");
  require(p >= 0.0 && p <= 1.0, "binomial_pmf: p outside [0,1]");
  std::vector<double> out(n + 1, 0.0);
  if (p == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (p == 1.0) {
    out[n] = 1.0;
    return out;
  }
  int mode = std::clamp(int(std::floor((n + 1) * p)), 0, n);
  std::vector<long double> v(n + 1, 0.0L);
  const long double r = (long double)p / (1.0L - (long double)p);
  v[mode] = 1.0L;
  for (int k = mode; k < n; ++k) v[k + 1] = v[k] * (long double)(n - k) / (long double)(k + 1) * r;
  for (int k = mode; k > 0; --k) v[k - 1] = v[k] * (long double)k / (long double)(n - k + 1) / r;
  long double total = 0.0L;
  for (auto x : v) total += x;
  for (int k = 0; k <= n; ++k) out[k] = double(v[k] / total);
  return out;
}

WeightLaw::WeightLaw(int n, double gamma, std::vector<double> pmf)
    : n_(n), gamma_(gamma), scale_(std::sqrt(n * gamma * (1.0 - gamma))), pmf_(std::move(pmf)) {}

WeightLaw WeightLaw::binomial(int n, double gamma, double p) {
  require(n >= 1, "WeightLaw: n must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("WeightLaw: gamma must lie in (0,1)");
  return WeightLaw(n, gamma, binomial_pmf(n, p));
}

WeightLaw WeightLaw::from_pmf(int n, double gamma, std::vector<double> pmf) {
  require(n >= 1, "WeightLaw: n must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("WeightLaw: gamma must lie in (0,1)");
  require(pmf.size() == std::size_t(n + 1), "WeightLaw: pmf must have n+1 entries");
  long double total = 0.0L;
  for (double p : pmf) {
    require(p >= 0.0 && std::isfinite(p), "WeightLaw: pmf entries must be finite and >= 0");
    total += p;
  }
  require(std::fabs(double(total) - 1.0) <= 1e-9, "WeightLaw: pmf must sum to 1");
  for (double& p : pmf) p = double(p / total);
  return WeightLaw(n, gamma, std::move(pmf));
}

double WeightLaw::moment(int p) const {
  long double acc = 0.0L;
  for (int w = 0; w <= n_; ++w) acc += pmf_[w] * std::pow((long double)y_of(w), p);
  return double(acc);
}

double WeightLaw::total_mass() const {
  long double acc = 0.0L;
  for (double p : pmf_) acc += p;
  return double(acc);
}

WeightLaw make_weight_law(int n, double gamma) { return WeightLaw::binomial(n, gamma, gamma); }

// ---------------------------------------------------------------------------

KrawtchoukBasis::KrawtchoukBasis(int n, double gamma, std::vector<long double> a,
                                 std::vector<long double> b)
    : n_(n), gamma_(gamma), max_degree_(int(a.size()) - 1), binomial_(false), a_(std::move(a)),
      b_(std::move(b)) {
  for (std::size_t k = 0; k < a_.size(); ++k) {
    aq_.push_back(a_[k]);
    bq_.push_back(b_[k]);
    inv_bq_.push_back(k == 0 ? 0 : 1 / bq_.back());
  }
  const __float128 g = gamma;
  scale_q_ = sqrtq(__float128(n) * g * (1 - g));
}

KrawtchoukBasis::KrawtchoukBasis(int n, double gamma, int max_degree) : n_(n), gamma_(gamma) {
  require(n >= 1, "KrawtchoukBasis: n must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("KrawtchoukBasis: gamma must lie in (0,1)");
  if (max_degree < 0) max_degree = n;
  if (max_degree > n) throw InvalidArgument("KrawtchoukBasis: degree exceeds n");
  max_degree_ = max_degree;
  const long double g = gamma;
  const long double s = std::sqrt((long double)n * g * (1.0L - g));
  const __float128 gq = gamma;
  scale_q_ = sqrtq(__float128(n) * gq * (1 - gq));
  a_.resize(max_degree + 1);
  b_.assign(max_degree + 1, 0.0L);
  for (int k = 0; k <= max_degree; ++k) {
    a_[k] = (long double)k * (1.0L - 2.0L * g) / s;
    if (k >= 1) b_[k] = std::sqrt((long double)k * (long double)(n - k + 1) / (long double)n);
  }
  // the stitched evaluation runs the recurrence to degree n whatever max_degree is
  aq_.resize(n + 1);
  bq_.assign(n + 1, 0);
  inv_bq_.assign(n + 1, 0);
  for (int k = 0; k <= n; ++k) {
    aq_[k] = __float128(k) * (1 - 2 * gq) / scale_q_;
    if (k >= 1) {
      bq_[k] = sqrtq(__float128(k) * __float128(n - k + 1) / __float128(n));
      inv_bq_[k] = 1 / bq_[k];
    }
  }
  // measured: forward alone stays accurate past ~2 sqrt(n) even at gamma = 0.02
  reflect_from_ = std::max(8, int(std::sqrt(n * std::min(gamma, 1.0 - gamma))));
}

KrawtchoukBasis KrawtchoukBasis::from_law(const WeightLaw& law, int max_degree) {
  const int n = law.n();
  require(max_degree >= 0 && max_degree <= n, "from_law: degree must be in [0, n]");
  std::vector<long double> y(n + 1), p(n + 1);
  for (int w = 0; w <= n; ++w) {
    y[w] = (long double)law.y_of(w);
    p[w] = law.prob(w);
  }
  std::vector<long double> prev(n + 1, 0.0L), cur(n + 1, 1.0L), next(n + 1);
  std::vector<long double> a(max_degree + 1), b(max_degree + 1, 0.0L);
  for (int k = 0; k <= max_degree; ++k) {
    long double ak = 0.0L;
    for (int w = 0; w <= n; ++w) ak += p[w] * y[w] * cur[w] * cur[w];
    a[k] = ak;
    if (k == max_degree) break;
    long double nrm = 0.0L;
    for (int w = 0; w <= n; ++w) {
      next[w] = (y[w] - ak) * cur[w] - b[k] * prev[w];
      nrm += p[w] * next[w] * next[w];
    }
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0L)) throw NumericalError("from_law: support too small for requested degree");
    b[k + 1] = nrm;
    for (int w = 0; w <= n; ++w) next[w] /= nrm;
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return KrawtchoukBasis(n, law.gamma(), std::move(a), std::move(b));
}

void KrawtchoukBasis::values(double y, std::span<long double> out) const {
  if (out.empty()) return;
  if (int(out.size()) - 1 > max_degree_) throw InvalidArgument("Krawtchouk: degree exceeds basis");
  const long double yy = y;
  out[0] = 1.0L;
  if (out.size() == 1) return;
  out[1] = (yy - a_[0]) / b_[1];
  for (std::size_t k = 1; k + 1 < out.size(); ++k)
    out[k + 1] = ((yy - a_[k]) * out[k] - b_[k] * out[k - 1]) / b_[k + 1];
}

void KrawtchoukBasis::forward_q(int w, std::size_t count, std::span<__float128> out) const {
  const __float128 y = (__float128(w) - __float128(gamma_) * n_) / scale_q_;
  out[0] = 1;
  if (count == 1) return;
  __float128 prev = 1, cur = (y - aq_[0]) * inv_bq_[1];
  out[1] = cur;
  for (std::size_t k = 1; k + 1 < count; ++k) {
    __float128 next = ((y - aq_[k]) * cur - bq_[k] * prev) * inv_bq_[k + 1];
    prev = cur;
    cur = next;
    out[k + 1] = cur;
  }
}

void KrawtchoukBasis::support_values(int w, std::span<long double> out) const {
  if (out.empty()) return;
  if (int(out.size()) - 1 > max_degree_) throw InvalidArgument("Krawtchouk: degree exceeds basis");
  require(w >= 0 && w <= n_, "Krawtchouk: weight outside [0,n]");
  const int top = int(out.size()) - 1;
  if (!binomial_ || top <= reflect_from_) {
    std::vector<__float128> v(std::size_t(top) + 1);
    forward_q(w, v.size(), v);
    for (int k = 0; k <= top; ++k) out[k] = (long double)v[k];
    return;
  }
  // Forward recurrence loses accuracy where Kr_k(w) decays in k. For the
  // binomial weight the reflection Kr_m(w) = (-1)^{m+w} ((1-g)/g)^{w-n/2}
  // Kr_{n-m}(n-w) turns the top of the range into the bottom. Forward errors
  // grow with k and reflected ones shrink, so switch where the two agree best.
  std::vector<__float128> fwd(std::size_t(n_) + 1), rev(std::size_t(n_) + 1), refl(std::size_t(n_) + 1);
  forward_q(w, fwd.size(), fwd);
  forward_q(n_ - w, rev.size(), rev);
  const __float128 g = gamma_;
  const __float128 log_f = (__float128(w) - __float128(n_) / 2) * logq((1 - g) / g);
  const __float128 factor = expq(log_f);
  const bool direct = factor > 0 && !isinfq(factor);
  for (int m = 0; m <= n_; ++m) {
    const __float128 r = rev[std::size_t(n_ - m)];
    if (r == 0) continue;
    const __float128 mag = direct ? factor * fabsq(r) : expq(log_f + logq(fabsq(r)));
    refl[m] = ((m + w) % 2 != 0) ? -copysignq(mag, r) : copysignq(mag, r);
  }
  int split = 0;
  __float128 best = 2;
  for (int k = 0; k <= n_; ++k) {
    const __float128 scale = fmaxq(fabsq(fwd[k]), fabsq(refl[k]));
    if (scale == 0) continue;
    const __float128 d = fabsq(fwd[k] - refl[k]) / scale;
    if (d < best) {
      best = d;
      split = k;
    }
  }
  for (int k = 0; k <= top; ++k) out[k] = (long double)(k <= split ? fwd[k] : refl[k]);
}

double KrawtchoukBasis::eval(int k, double y) const {
  require(k >= 0, "Krawtchouk: negative degree");
  if (k > max_degree_) throw InvalidArgument("Krawtchouk: degree exceeds basis");
  std::vector<long double> v(k + 1);
  values(y, v);
  return double(v[k]);
}

std::vector<long double> KrawtchoukBasis::monomial_coefficients(int k) const {
  if (k < 0 || k > max_degree_) throw InvalidArgument("Krawtchouk: degree exceeds basis");
  std::vector<long double> prev, cur{1.0L};
  for (int j = 0; j < k; ++j) {
    std::vector<long double> next(j + 2, 0.0L);
    for (int i = 0; i <= j; ++i) {
      next[i + 1] += cur[i];
      next[i] -= a_[j] * cur[i];
    }
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= b_[j] * prev[i];
    for (auto& c : next) c /= b_[j + 1];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

void KrawtchoukBasis::write_csv(std::ostream& os, int max_k) const {
  max_k = std::min(max_k, max_degree_);
  os << "degree";
  for (int j = 0; j <= max_k; ++j) os << ",c" << j;
  os << '\n';
  auto old = os.precision(21);
  for (int k = 0; k <= max_k; ++k) {
    auto c = monomial_coefficients(k);
    os << k;
    for (int j = 0; j <= max_k; ++j) os << ',' << (j <= k ? c[j] : 0.0L);
    os << '\n';
  }
  os.precision(old);
}

KrawtchoukBoundReport verify_krawtchouk_bound(const KrawtchoukBasis& basis, int k,
                                              std::span<const double> y_grid, double constant) {
  require(k >= 1, "verify_krawtchouk_bound: degree must be >= 1");
  if (k > basis.max_degree()) throw InvalidArgument("verify_krawtchouk_bound: degree exceeds basis");
  KrawtchoukBoundReport r;
  r.degree = k;
  r.constant = constant;
  const int n = basis.n();
  r.within_validity = 2 * k <= n;
  const double ylim = std::pow(double(n), 1.0 / 6.0) / 2.0;
  const long double kq = std::pow((long double)k, -0.25L);
  std::vector<long double> v(k + 1);
  for (double y : y_grid) {
    if (std::fabs(y) > ylim + 1e-12) r.within_validity = false;
    basis.values(y, v);
    long double ratio = std::fabs(v[k]) * kq * std::exp(-(long double)y * y / 4.0L);
    if (!std::isfinite(double(ratio))) throw NumericalError("verify_krawtchouk_bound: overflow");
    if (double(ratio) > r.max_ratio) {
      r.max_ratio = double(ratio);
      r.argmax_y = y;
    }
  }
  r.below_constant = r.max_ratio <= constant;
  return r;
}

std::vector<double> symmetric_grid(double half_width, int points) {
  require(points >= 1, "symmetric_grid: need at least one point");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = 0.0;
    return g;
  }
  for (int i = 0; i < points; ++i) g[i] = -half_width + 2.0 * half_width * i / (points - 1);
  return g;
}

}  // namespace ldtv
