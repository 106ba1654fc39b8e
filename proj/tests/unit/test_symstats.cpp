#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <sstream>

#include "ldtv/core/error.hpp"
#include "ldtv/core/estimate.hpp"
#include "ldtv/core/parallel.hpp"
#include "ldtv/core/rng.hpp"
#include "ldtv/orthopoly.hpp"
#include "ldtv/symstats.hpp"

using namespace ldtv;

namespace {

Sampler null_vec(int n) { return Sampler(NullSpec{GaussVector{n}}); }

PointCloud normals(std::uint64_t m, std::uint64_t seed, double shift = 0.0) {
  PointCloud pc;
  pc.k = 1;
  pc.count = m;
  pc.values.resize(m);
  for (std::uint64_t i = 0; i < m; ++i) pc.values[i] = CounterRng(seed, Stream::kAuxiliary, i).normal() + shift;
  return pc;
}

}  // namespace

TEST_CASE("F_k: constant input") {
  const int n = 50;
  std::vector<double> x(n, 0.0);
  auto f = eval_Fk(x, 2);
  CHECK(f.values[0] == 0.0);
  CHECK(f.values[1] == doctest::Approx(-std::sqrt(n / 2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(eval_Fk(x, 0), InvalidArgument);
}

TEST_CASE("F_k: null moments and covariances") {
  const int n = 40, k = 4;
  const std::uint64_t m = 40000;
  auto z = sample_Fk(null_vec(n), {k}, m, 3);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      Moments mo;
      for (std::uint64_t s = 0; s < m; ++s) mo.add(z.row(s)[i] * z.row(s)[j]);
      CHECK(mo.estimate().within(i == j ? 1.0 : 0.0, 4.0));
    }
    Moments mean;
    for (std::uint64_t s = 0; s < m; ++s) mean.add(z.row(s)[i]);
    CHECK(mean.estimate().within(0.0, 4.0));
  }
}

TEST_CASE("F_k: sampling is thread-count independent") {
  FkSampling opts{3, 0.4, 2};
  auto law = Sampler(quadrature_product_spec(5, 400));
  set_default_threads(1);
  auto a = sample_Fk(law, opts, 300, 11);
  set_default_threads(4);
  auto b = sample_Fk(law, opts, 300, 11);
  set_default_threads(0);
  CHECK(a.values == b.values);
}

TEST_CASE("regularity: examples") {
  std::vector<double> zero(100, 0.0);
  auto r0 = regularity_check(zero, 2);
  CHECK(r0.min_eig == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(r0.is_regular);

  std::vector<double> y(1000);
  for (int i = 0; i < 1000; ++i) y[i] = i % 2 ? 10.0 : CounterRng(1, Stream::kAuxiliary, i).normal();
  CHECK_FALSE(regularity_check(y, 4).is_regular);

  int regular = 0;
  std::vector<double> g(100000);
  for (int t = 0; t < 5; ++t) {
    CounterRng rng(t, Stream::kAuxiliary, 0);
    for (auto& v : g) v = rng.normal();
    regular += regularity_check(g, 4).is_regular;
  }
  CHECK(regular == 5);
  CHECK_THROWS_AS(regularity_check(g, 17), InvalidArgument);
}

TEST_CASE("regularity: Gram matrix and eigenvalue equivalence") {
  const int n = 300, ell = 3;
  for (double spread : {1.0, 1.6}) {
    std::vector<double> y(n);
    for (int j = 0; j < n; ++j) y[j] = spread * CounterRng(8, Stream::kAuxiliary, j).normal();
    auto rep = regularity_check(y, ell);
    // entries against direct sums
    for (int a = 0; a <= ell; ++a)
      for (int b = 0; b <= ell; ++b) {
        double s = 0;
        for (double v : y) s += hermite(a, v) * hermite(b, v);
        CHECK(rep.gram(a, b) == doctest::Approx(s / n).epsilon(1e-12));
      }
    // every square average sits inside [min_eig, max_eig]; and the
    // extreme eigenvectors attain the ends, so the interval test is exact
    CounterRng rng(9, Stream::kAuxiliary, 1);
    bool all_inside = true;
    for (int t = 0; t < 200; ++t) {
      std::vector<double> c(ell + 1);
      double cc = 0;
      for (auto& v : c) {
        v = rng.normal();
        cc += v * v;
      }
      double avg = 0;
      for (double v : y) {
        double p = 0;
        for (int a = 0; a <= ell; ++a) p += c[a] * hermite(a, v);
        avg += p * p;
      }
      const double q = avg / n / cc;
      CHECK(q >= rep.min_eig - 1e-9);
      CHECK(q <= rep.max_eig + 1e-9);
      all_inside &= q >= 0.5 && q <= 1.5;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.gram);
    for (int idx : {0, ell}) {
      Eigen::VectorXd c = es.eigenvectors().col(idx);
      const double q = c.dot(rep.gram * c);
      CHECK(q == doctest::Approx(idx == 0 ? rep.min_eig : rep.max_eig).epsilon(1e-10));
    }
    if (rep.is_regular) CHECK(all_inside);
    if (spread > 1.5) CHECK_FALSE(rep.is_regular);
  }
}

TEST_CASE("F_k: regular conditioning and its attempt cap") {
  // every coordinate shifted by 50: never regular
  auto law = Sampler(PlantedSpec{SpikedMean{50.0 * std::sqrt(20.0)}, GaussVector{20}});
  CHECK_THROWS_AS(sample_Fk(law, {2, 0.0, 2, 5}, 3, 1), NumericalError);
  auto z = sample_Fk(null_vec(2000), {2, 0.5, 2}, 50, 1);
  CHECK(z.count == 50);
}

TEST_CASE("moment probe") {
  const std::uint64_t m = 660000;
  auto z = sample_Fk(null_vec(24), {2}, m, 5);
  std::vector<double> e1 = {1.0, 0.0};
  auto mp = moment_probe(z, e1, 8);
  CHECK(mp.t == std::vector<int>{2, 4, 6, 8});
  CHECK(mp.max_ratio <= 1.2);
  CHECK_FALSE(mp.flagged);
  // Gaussian moments (t-1)!! within a few percent
  CHECK(std::pow(mp.ratio[3] * std::sqrt(8.0), 8) == doctest::Approx(105).epsilon(0.06));
  CHECK(moment_probe(z, e1, 8, 0.5).flagged);
  PointCloud small = z;
  small.count = 1000;
  CHECK_THROWS_AS(moment_probe(small, e1, 8), InvalidArgument);
}

TEST_CASE("empirical cf: exact and Gaussian cases") {
  auto z = normals(200000, 4);
  CfGrid g;
  g.k = 1;
  for (double t : {0.0, 0.5, 1.0, 2.0, 3.0}) g.xi.push_back({t});
  empirical_cf(z, g);
  CHECK(g.values[0].value == std::complex<double>(1.0, 0.0));
  for (std::size_t i = 1; i < g.xi.size(); ++i) {
    const double t = g.xi[i][0];
    CHECK(std::fabs(g.values[i].value.real() - std::exp(-t * t / 2)) <= 3 * g.values[i].std_err);
    CHECK(std::fabs(g.values[i].value.imag()) <= 3 * g.values[i].std_err);
    CHECK(g.values[i].std_err <= 1 / std::sqrt(200000.0));
  }

  // F_1 under the null along e_1
  auto f = sample_Fk(null_vec(16), {2}, 100000, 6);
  auto rg = radial_grid(2, 3.0, 1, 6);
  empirical_cf(f, rg);
  for (std::size_t i = 0; i < rg.xi.size(); ++i)
    CHECK(std::abs(rg.values[i].value - std::exp(-rg.radius[i] * rg.radius[i] / 2)) <=
          4 * rg.values[i].std_err);
}

TEST_CASE("F_1 under the null is standard normal (KS)") {
  boost::math::normal_distribution<> N;
  int pass = 0;
  const int trials = 20;
  const std::uint64_t m = 4000;
  for (int t = 0; t < trials; ++t) {
    auto z = sample_Fk(null_vec(10), {1}, m, 100 + t);
    auto v = z.values;
    std::sort(v.begin(), v.end());
    double ks = 0;
    for (std::uint64_t i = 0; i < m; ++i) {
      const double c = boost::math::cdf(N, v[i]);
      ks = std::max({ks, std::fabs(c - double(i) / m), std::fabs(c - double(i + 1) / m)});
    }
    pass += ks <= 1.63 / std::sqrt(double(m));
  }
  CHECK(pass >= trials - 2);
}

TEST_CASE("radial grid layout") {
  auto g = radial_grid(3, 2.0, 32, 64, 1);
  CHECK(g.xi.size() == 32 * 64);
  CHECK(g.xi[63] == std::vector<double>{2.0, 0.0, 0.0});
  for (std::size_t i = 0; i < g.xi.size(); ++i) {
    double s = 0;
    for (double v : g.xi[i]) s += v * v;
    CHECK(std::sqrt(s) == doctest::Approx(g.radius[i]).epsilon(1e-12));
  }
}

TEST_CASE("frequency matching") {
  auto a = sample_Fk(null_vec(20), {2}, 20000, 1);
  auto b = sample_Fk(null_vec(20), {2}, 20000, 2);
  auto grid = radial_grid(2, 2.0, 8, 16, 3);
  CfGrid ga = grid, gb = grid, gc = grid;
  empirical_cf(a, ga);
  empirical_cf(b, gb);
  auto same = frequency_match_diag(ga, ga, 2.0);
  CHECK(same.sup_diff == 0.0);
  auto indep = frequency_match_diag(ga, gb, 2.0);
  CHECK(indep.sup_diff <= 1.5 * indep.noise_floor);

  auto spike = sample_Fk(Sampler(PlantedSpec{SpikedMean{3.0}, GaussVector{20}}), {2}, 20000, 4);
  empirical_cf(spike, gc);
  auto pos = frequency_match_diag(ga, gc, 2.0);
  CHECK(pos.sup_diff > 10 * pos.noise_floor);

  CfGrid other = radial_grid(2, 1.0, 8, 16, 3);
  empirical_cf(a, other);
  CHECK_THROWS_AS(frequency_match_diag(ga, other, 1.0), InvalidArgument);
}

TEST_CASE("fourier decay") {
  // null, k=1: |cf| = exp(-R^2/2), so b * eps = 1/2
  auto z = normals(400000, 10);
  auto g = radial_grid(1, 3.0, 1, 30);
  empirical_cf(z, g);
  const double eps = 0.25;
  auto fd = fourier_decay_diag(g, eps);
  CHECK(fd.points_fitted >= 10);
  CHECK(fd.b * eps == doctest::Approx(0.5).epsilon(0.05));
  CHECK(fd.a == doctest::Approx(1.0).epsilon(0.05));

  // +-1 coordinates, no noise: F_1 lives on a lattice of spacing 2/sqrt(n),
  // so |cf| returns to 1 at R = pi sqrt(n)
  const int n = 16;
  auto lat = sample_Fk(Sampler(quadrature_product_spec(2, n)), {1}, 20000, 2);
  auto lg = radial_grid(1, 2 * std::numbers::pi * std::sqrt(double(n)), 1, 64);
  empirical_cf(lat, lg);
  CHECK(std::abs(lg.values[31].value) == doctest::Approx(1.0).epsilon(1e-9));
  auto lfd = fourier_decay_diag(lg, 0.0);
  CHECK(lfd.curve.back().max_abs == doctest::Approx(1.0).epsilon(1e-9));

  // the same law with OU noise decays
  auto noisy = sample_Fk(Sampler(quadrature_product_spec(2, n)), {1, 0.5}, 20000, 2);
  CfGrid ng = radial_grid(1, 2 * std::numbers::pi * std::sqrt(double(n)), 1, 64);
  empirical_cf(noisy, ng);
  auto nfd = fourier_decay_diag(ng, 0.5);
  CHECK(nfd.b > 0.0);
  CHECK(nfd.tail_floor < 0.05);
}

TEST_CASE("histogram TV") {
  auto a = normals(1000000, 1);
  auto same = tv_histogram(a, a, 200);
  CHECK(same.tv == 0.0);
  auto b = normals(1000000, 2, 1.0);
  auto h = tv_histogram(a, b, 200);
  const double exact = 2 * boost::math::cdf(boost::math::normal_distribution<>(), 0.5) - 1;
  CHECK(std::fabs(h.tv - exact) <= 0.01);
  CHECK(h.std_err > 0.0);
  CHECK(h.std_err < 0.002);
  CHECK(h.cells == 201);

  // two samples of one law land within the bias floor
  auto c = normals(1000000, 3);
  auto hc = tv_histogram(a, c, 200);
  CHECK(hc.tv <= hc.bias_floor + 3 * hc.std_err);
  CHECK(hc.tv >= 0.5 * hc.bias_floor);

  PointCloud four;
  four.k = 4;
  four.count = 10;
  four.values.assign(40, 0.0);
  CHECK_THROWS_AS(tv_histogram(four, four, 5), InvalidArgument);
  PointCloud shorter = a;
  shorter.count = 10;
  CHECK_THROWS_AS(tv_histogram(a, shorter, 10), InvalidArgument);
}

TEST_CASE("histogram TV in two dimensions") {
  auto a = sample_Fk(null_vec(30), {2}, 100000, 1);
  auto b = sample_Fk(null_vec(30), {2}, 100000, 2);
  auto h = tv_histogram(a, b, 20);
  CHECK(h.cells == 401);
  CHECK(h.tv <= h.bias_floor + 3 * h.std_err);
}

TEST_CASE("cf csv") {
  CfGrid g = radial_grid(2, 1.0, 1, 2);
  empirical_cf(sample_Fk(null_vec(4), {2}, 10, 1), g);
  std::ostringstream os;
  write_cf_csv(os, g);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "xi0,xi1,re,im,stderr");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 2);
}
