#include "ldtv/symstats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>

#include "ldtv/core/error.hpp"
#include "ldtv/core/parallel.hpp"
#include "ldtv/core/rng.hpp"
#include "ldtv/orthopoly.hpp"

namespace ldtv {

void eval_Fk(std::span<const double> x, std::span<double> out) {
  const int k = int(out.size());
  require(k >= 1, "eval_Fk: k must be >= 1");
  require(!x.empty(), "eval_Fk: empty input");
  std::vector<double> acc(k + 1, 0.0), h(k + 1);
  for (double v : x) {
    hermite_values(v, h);
    for (int i = 1; i <= k; ++i) acc[i] += h[i];
  }
  const double s = 1.0 / std::sqrt(double(x.size()));
  for (int i = 0; i < k; ++i) out[i] = acc[i + 1] * s;
}

SymStatVector eval_Fk(std::span<const double> x, int k) {
  require(k >= 1, "eval_Fk: k must be >= 1");
  SymStatVector f{k, std::vector<double>(k)};
  eval_Fk(x, f.values);
  return f;
}

RegularityReport regularity_check(std::span<const double> y, int ell) {
  require(ell >= 0 && ell <= 16, "regularity_check: ell must lie in [0,16]");
  require(!y.empty(), "regularity_check: empty input");
  const int d = ell + 1;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> h(d);
  Eigen::Map<Eigen::VectorXd> hv(h.data(), d);
  for (double v : y) {
    hermite_values(v, h);
    G.selfadjointView<Eigen::Lower>().rankUpdate(hv);
  }
  G = G.selfadjointView<Eigen::Lower>();
  G /= double(y.size());
  RegularityReport rep;
  rep.ell = ell;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  rep.min_eig = es.eigenvalues().minCoeff();
  rep.max_eig = es.eigenvalues().maxCoeff();
  rep.is_regular = std::isfinite(rep.max_eig) && rep.min_eig >= 0.5 && rep.max_eig <= 1.5;
  rep.gram = std::move(G);
  return rep;
}

PointCloud sample_Fk(const Sampler& law, const FkSampling& opts, std::uint64_t count,
                     std::uint64_t seed) {
  require(law.domain() == Domain::kVector, "sample_Fk: law must live on R^n");
  require(opts.k >= 1, "sample_Fk: k must be >= 1");
  require(opts.eps >= 0.0 && opts.eps <= 1.0, "sample_Fk: eps must lie in [0,1]");
  require(opts.max_attempts >= 1, "sample_Fk: max_attempts must be >= 1");
  const int n = law.n(), k = opts.k;
  PointCloud pc;
  pc.k = k;
  pc.count = count;
  pc.values.resize(count * k);
  map_chunks<int>(
      count,
      [&](std::uint64_t b, std::uint64_t e) {
        std::vector<double> x(n);
        for (auto i = b; i < e; ++i) {
          if (opts.condition_ell > 0) {
            int a = 0;
            for (;; ++a) {
              if (a == opts.max_attempts)
                throw NumericalError("sample_Fk: no regular draw within " +
                                     std::to_string(opts.max_attempts) + " attempts");
              law.draw_vector(seed, i * std::uint64_t(opts.max_attempts) + a, x);
              if (regularity_check(x, opts.condition_ell).is_regular) break;
            }
          } else {
            law.draw_vector(seed, i, x);
          }
          std::span<double> out(pc.values.data() + i * k, k);
          if (opts.eps > 0.0) eval_Fk(apply_ou_noise(x, opts.eps, seed, i), out);
          else eval_Fk(x, out);
        }
        return 0;
      },
      64);
  return pc;
}

MomentProbe moment_probe(const PointCloud& z, std::span<const double> xi, int T, double cap) {
  require(T >= 2 && T % 2 == 0, "moment_probe: T must be even and >= 2");
  require(int(xi.size()) == z.k, "moment_probe: direction has wrong dimension");
  if (double(z.count) < 100.0 * std::pow(3.0, T))
    throw InvalidArgument("moment_probe: need at least 100*3^T samples for moment T");
  double norm = 0.0;
  for (double v : xi) norm += v * v;
  norm = std::sqrt(norm);
  require(norm > 0.0, "moment_probe: zero direction");

  const int half = T / 2;
  using Acc = std::vector<long double>;
  auto parts = map_chunks<Acc>(z.count, [&](std::uint64_t b, std::uint64_t e) {
    Acc acc(half, 0.0L);
    for (auto i = b; i < e; ++i) {
      auto r = z.row(i);
      double p = 0.0;
      for (int j = 0; j < z.k; ++j) p += r[j] * xi[j];
      p /= norm;
      const long double p2 = (long double)p * p;
      long double pw = 1.0L;
      for (int t = 0; t < half; ++t) acc[t] += (pw *= p2);
    }
    return acc;
  });
  auto acc = reduce_pairwise(std::move(parts), [](Acc a, const Acc& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  });
  MomentProbe mp;
  mp.cap = cap;
  for (int t = 0; t < half; ++t) {
    const int order = 2 * (t + 1);
    const double m = double(acc[t] / (long double)z.count);
    mp.t.push_back(order);
    mp.ratio.push_back(std::pow(m, 1.0 / order) / std::sqrt(double(order)));
    mp.max_ratio = std::max(mp.max_ratio, mp.ratio.back());
  }
  mp.flagged = mp.max_ratio > cap;
  return mp;
}

CfGrid radial_grid(int k, double R, int directions, int radii, std::uint64_t seed) {
  require(k >= 1 && directions >= 1 && radii >= 1, "radial_grid: bad shape");
  require(R > 0.0, "radial_grid: R must be positive");
  CfGrid g;
  g.k = k;
  for (int d = 0; d < directions; ++d) {
    std::vector<double> u(k, 0.0);
    if (d == 0) {
      u[0] = 1.0;
    } else {
      CounterRng rng(seed, Stream::kGrid, d);
      double s = 0.0;
      do {
        s = 0.0;
        for (auto& v : u) {
          v = rng.normal();
          s += v * v;
        }
      } while (s == 0.0);
      for (auto& v : u) v /= std::sqrt(s);
    }
    for (int j = 1; j <= radii; ++j) {
      const double r = R * j / radii;
      std::vector<double> xi(k);
      for (int c = 0; c < k; ++c) xi[c] = r * u[c];
      g.xi.push_back(std::move(xi));
      g.radius.push_back(r);
      g.direction.push_back(d);
    }
  }
  return g;
}

void empirical_cf(const PointCloud& z, CfGrid& grid) {
  require(z.k == grid.k, "empirical_cf: dimension mismatch");
  require(z.count >= 2, "empirical_cf: need at least two samples");
  const std::size_t G = grid.xi.size();
  if (grid.radius.size() != G) {
    grid.radius.clear();
    for (const auto& x : grid.xi) {
      double s = 0.0;
      for (double v : x) s += v * v;
      grid.radius.push_back(std::sqrt(s));
    }
    grid.direction.assign(G, -1);
  }
  using Acc = std::vector<double>;  // per xi: sum cos, sum cos^2, sum sin, sum sin^2
  auto parts = map_chunks<Acc>(z.count, [&](std::uint64_t b, std::uint64_t e) {
    Acc acc(4 * G, 0.0);
    for (auto i = b; i < e; ++i) {
      auto r = z.row(i);
      for (std::size_t g = 0; g < G; ++g) {
        double a = 0.0;
        for (int c = 0; c < z.k; ++c) a += grid.xi[g][c] * r[c];
        const double co = std::cos(a), si = std::sin(a);
        acc[4 * g] += co;
        acc[4 * g + 1] += co * co;
        acc[4 * g + 2] += si;
        acc[4 * g + 3] += si * si;
      }
    }
    return acc;
  });
  auto acc = reduce_pairwise(std::move(parts), [](Acc a, const Acc& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  });
  const double m = double(z.count);
  grid.values.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    const double c = acc[4 * g] / m, s = acc[4 * g + 2] / m;
    const double vc = std::max(0.0, acc[4 * g + 1] / m - c * c) * m / (m - 1);
    const double vs = std::max(0.0, acc[4 * g + 3] / m - s * s) * m / (m - 1);
    grid.values[g] = {{c, s}, std::sqrt(std::max(vc, vs) / m)};
  }
}

FrequencyMatch frequency_match_diag(const CfGrid& null_cf, const CfGrid& planted_cf, double R) {
  if (null_cf.k != planted_cf.k || null_cf.xi != planted_cf.xi)
    throw InvalidArgument("frequency_match_diag: grids differ");
  require(null_cf.values.size() == null_cf.xi.size() &&
              planted_cf.values.size() == planted_cf.xi.size(),
          "frequency_match_diag: grids carry no values");
  FrequencyMatch fm;
  double max_se = 0.0;
  for (std::size_t g = 0; g < null_cf.xi.size(); ++g) {
    if (null_cf.radius[g] > R * (1 + 1e-12)) continue;
    const double d = std::abs(planted_cf.values[g].value - null_cf.values[g].value);
    const double se = std::hypot(planted_cf.values[g].std_err, null_cf.values[g].std_err);
    max_se = std::max(max_se, se);
    if (d > fm.sup_diff) {
      fm.sup_diff = d;
      fm.argmax = g;
      fm.stderr_at_max = se;
    }
  }
  fm.noise_floor = 3.0 * max_se;
  return fm;
}

FourierDecay fourier_decay_diag(const CfGrid& cf, double eps) {
  require(eps >= 0.0, "fourier_decay_diag: eps must be >= 0");
  require(cf.values.size() == cf.xi.size() && !cf.values.empty(),
          "fourier_decay_diag: grid carries no values");
  std::map<double, DecayPoint> by_r;
  for (std::size_t g = 0; g < cf.xi.size(); ++g) {
    auto& p = by_r[cf.radius[g]];
    p.radius = cf.radius[g];
    const double a = std::abs(cf.values[g].value);
    if (a >= p.max_abs) {
      p.max_abs = a;
      p.std_err = cf.values[g].std_err;
    }
  }
  FourierDecay fd;
  for (auto& [r, p] : by_r) fd.curve.push_back(p);
  // least squares log|cf| = log a - slope R^2
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& p : fd.curve) {
    if (p.max_abs <= 3.0 * p.std_err || p.max_abs <= 0.0) continue;
    const double x = p.radius * p.radius, y = std::log(p.max_abs);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++cnt;
  }
  fd.points_fitted = cnt;
  if (cnt >= 2 && cnt * sxx - sx * sx > 0.0) {
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    fd.a = std::exp((sy - slope * sx) / cnt);
    fd.b = -slope / (eps > 0.0 ? eps : 1.0);
  }
  fd.tail_floor = INFINITY;
  for (std::size_t i = fd.curve.size() / 2; i < fd.curve.size(); ++i)
    fd.tail_floor = std::min(fd.tail_floor, fd.curve[i].max_abs);
  return fd;
}

TvHistogram tv_histogram(const PointCloud& a, const PointCloud& b, int bins) {
  if (a.k > 3 || a.k < 1) throw InvalidArgument("tv_histogram: dimension must lie in [1,3]");
  require(a.k == b.k, "tv_histogram: dimension mismatch");
  require(a.count == b.count && a.count > 0, "tv_histogram: need equal, nonzero sample counts");
  require(bins >= 1, "tv_histogram: bins must be >= 1");
  const int k = a.k;
  const std::uint64_t m = a.count;
  std::vector<double> lo(k), hi(k);
  std::vector<double> col(2 * m);
  for (int c = 0; c < k; ++c) {
    for (std::uint64_t i = 0; i < m; ++i) {
      col[i] = a.values[i * k + c];
      col[m + i] = b.values[i * k + c];
    }
    auto q = [&](double p) {
      auto idx = std::size_t(std::floor(p * double(col.size() - 1)));
      std::nth_element(col.begin(), col.begin() + idx, col.end());
      return col[idx];
    };
    lo[c] = q(0.001);
    hi[c] = q(0.999);
    if (!(hi[c] > lo[c])) {
      lo[c] -= 0.5;
      hi[c] += 0.5;
    }
  }
  std::size_t cells = 1;
  for (int c = 0; c < k; ++c) cells *= bins;
  const std::size_t overflow = cells;
  auto cell_of = [&](std::span<const double> r) {
    std::size_t idx = 0;
    for (int c = 0; c < k; ++c) {
      const double v = r[c];
      if (!(v >= lo[c] && v <= hi[c])) return overflow;
      int j = int((v - lo[c]) / (hi[c] - lo[c]) * bins);
      j = std::min(j, bins - 1);
      idx = idx * bins + j;
    }
    return idx;
  };
  std::vector<std::uint64_t> ca(cells + 1, 0), cb(cells + 1, 0);
  for (std::uint64_t i = 0; i < m; ++i) {
    ++ca[cell_of(a.row(i))];
    ++cb[cell_of(b.row(i))];
  }
  TvHistogram h;
  h.cells = int(cells + 1);
  h.m = m;
  const double md = double(m);
  long double tv = 0.0L, floor_ = 0.0L, sa = 0.0L, sa2 = 0.0L, sb = 0.0L, sb2 = 0.0L;
  for (std::size_t c = 0; c <= cells; ++c) {
    const double pa = ca[c] / md, pb = cb[c] / md;
    tv += std::fabs(pa - pb);
    floor_ += std::sqrt(0.5 * (pa + pb) / (std::numbers::pi * md));
    const double s = pa > pb ? 1.0 : (pa < pb ? -1.0 : 0.0);
    sa += s * pa, sa2 += s * s * pa;
    sb += s * pb, sb2 += s * s * pb;
  }
  h.tv = double(0.5L * tv);
  h.bias_floor = double(floor_);
  // delta method with the cell signs held fixed
  const long double var = 0.25L * ((sa2 - sa * sa) + (sb2 - sb * sb)) / md;
  h.std_err = double(std::sqrt(std::max(0.0L, var)));
  return h;
}

void write_cf_csv(std::ostream& os, const CfGrid& grid) {
  for (int c = 0; c < grid.k; ++c) os << "xi" << c << ',';
  os << "re,im,stderr\n";
  const auto old = os.precision(17);
  for (std::size_t g = 0; g < grid.xi.size(); ++g) {
    for (double v : grid.xi[g]) os << v << ',';
    const auto& val = g < grid.values.size() ? grid.values[g] : CfValue{};
    os << val.value.real() << ',' << val.value.imag() << ',' << val.std_err << '\n';
  }
  os.precision(old);
}

}  // namespace ldtv
