#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <sstream>

#include "ldtv/core/error.hpp"
#include "ldtv/core/rng.hpp"
#include "ldtv/orthopoly.hpp"

using namespace ldtv;
namespace mp = boost::multiprecision;
using Big = mp::cpp_bin_float_50;
using Rat = mp::cpp_rational;

namespace {

// He_k(x)/sqrt(k!) from the explicit sum, in 50-digit arithmetic.
Big hermite_explicit(int k, Big x) {
  Big sum = 0;
  Big kfact = 1;
  for (int i = 2; i <= k; ++i) kfact *= i;
  for (int m = 0; 2 * m <= k; ++m) {
    Big mfact = 1, rfact = 1;
    for (int i = 2; i <= m; ++i) mfact *= i;
    for (int i = 2; i <= k - 2 * m; ++i) rfact *= i;
    Big term = kfact / (mfact * rfact * mp::pow(Big(2), m)) * mp::pow(x, k - 2 * m);
    sum += (m % 2 ? -term : term);
  }
  return sum / mp::sqrt(kfact);
}

// Monic orthogonal polynomials in w for Binomial(n, num/den), by exact
// rational Gram-Schmidt on monomials. Returns P_k(w) on the support and the
// squared norms.
struct RationalKraw {
  std::vector<std::vector<Rat>> values;  // [k][w]
  std::vector<Rat> norm2;
  std::vector<Rat> pmf;
};

RationalKraw rational_krawtchouk(int n, int num, int den, int kmax) {
  Rat p(num, den);
  RationalKraw out;
  out.pmf.resize(n + 1);
  for (int w = 0; w <= n; ++w) {
    mp::cpp_int c = 1;
    for (int i = 0; i < w; ++i) c = c * (n - i) / (i + 1);
    Rat pw = 1, qw = 1;
    for (int i = 0; i < w; ++i) pw *= p;
    for (int i = 0; i < n - w; ++i) qw *= (1 - p);
    out.pmf[w] = Rat(c) * pw * qw;
  }
  auto inner = [&](const std::vector<Rat>& a, const std::vector<Rat>& b) {
    Rat s = 0;
    for (int w = 0; w <= n; ++w) s += out.pmf[w] * a[w] * b[w];
    return s;
  };
  for (int k = 0; k <= kmax; ++k) {
    std::vector<Rat> mono(n + 1);
    for (int w = 0; w <= n; ++w) {
      Rat v = 1;
      for (int i = 0; i < k; ++i) v *= w;
      mono[w] = v;
    }
    for (int j = 0; j < k; ++j) {
      Rat c = inner(mono, out.values[j]) / out.norm2[j];
      for (int w = 0; w <= n; ++w) mono[w] -= c * out.values[j][w];
    }
    out.norm2.push_back(inner(mono, mono));
    out.values.push_back(std::move(mono));
  }
  return out;
}

}  // namespace

TEST_CASE("hermite small cases") {
  CHECK(hermite(0, 3.7) == 1.0);
  CHECK(hermite(1, 2.0) == 2.0);
  CHECK(hermite(2, 0.0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("hermite recurrence agrees with the explicit sum") {
  double worst = 0.0;
  for (int k = 0; k <= 30; ++k) {
    for (int i = 0; i <= 80; ++i) {
      double x = -10.0 + 0.25 * i + 0.0123;
      Big ref = hermite_explicit(k, Big(x));
      double got = hermite(k, x);
      // near a root the relative error of any evaluation scheme blows up,
      // so measure against the local size of the family
      std::vector<double> all(k + 1);
      hermite_values(x, all);
      double env = 0.0;
      for (double v : all) env = std::max(env, std::abs(v));
      double scale = std::max(std::abs(ref.convert_to<double>()), 1e-6 * env);
      double err = std::abs((Big(got) - ref).convert_to<double>()) / scale;
      worst = std::max(worst, err);
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("hermite derivative identity by finite differences") {
  HermiteBasis basis(12);
  const double h = 1e-5;
  for (int k = 1; k <= 12; ++k) {
    for (double x : {-3.1, -1.2, 0.4, 2.7}) {
      double fd = (basis.eval(k, x + h) - basis.eval(k, x - h)) / (2 * h);
      double exact = basis.derivative(k, x);
      CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("gauss hermite rule") {
  auto r2 = gauss_hermite(2);
  CHECK(r2.nodes[0] == doctest::Approx(-1.0));
  CHECK(r2.weights[0] == doctest::Approx(0.5));
  auto r3 = gauss_hermite(3);
  CHECK(r3.nodes[0] == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-14));
  CHECK(r3.nodes[1] == 0.0);
  CHECK(r3.weights[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(r3.weights[1] == doctest::Approx(2.0 / 3).epsilon(1e-14));

  SUBCASE("orthonormality of h_a h_b") {
    auto rule = gauss_hermite(40);
    double worst = 0.0;
    for (int a = 0; a <= 12; ++a)
      for (int b = 0; b <= 12; ++b) {
        double v = rule.integrate([&](double x) { return hermite(a, x) * hermite(b, x); });
        worst = std::max(worst, std::abs(v - (a == b)));
      }
    CHECK(worst <= 1e-10);
  }
  SUBCASE("large rules stay normalized") {
    for (int m : {64, 400, 800, 1600}) {
      auto rule = gauss_hermite(m);
      double s = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        s += rule.weights[i];
        s2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(s2 == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("derivative bound for random hermite polynomials") {
  auto rule = gauss_hermite(30);
  for (int trial = 0; trial < 200; ++trial) {
    CounterRng r(21, Stream::kCorpus, trial);
    int k = 1 + int(r.below(8));
    std::vector<double> c(k + 1);
    for (auto& v : c) v = r.normal();
    // Var p = sum_{l>=1} c_l^2 ; p' = sum c_l sqrt(l) h_{l-1}
    double var = rule.integrate([&](double x) {
      double p = 0;
      for (int l = 1; l <= k; ++l) p += c[l] * hermite(l, x);
      return p * p;
    });
    double dsq = rule.integrate([&](double x) {
      double d = 0;
      for (int l = 1; l <= k; ++l) d += c[l] * std::sqrt(double(l)) * hermite(l - 1, x);
      return d * d;
    });
    CHECK(var <= dsq * (1 + 1e-12));
    CHECK(dsq <= k * var * (1 + 1e-12));
  }
}

TEST_CASE("weight law basics") {
  auto law = make_weight_law(2, 0.5);
  CHECK(law.prob(0) == doctest::Approx(0.25));
  CHECK(law.prob(1) == doctest::Approx(0.5));
  CHECK(law.y_of(0) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(law.y_of(1) == 0.0);
  CHECK(law.y_of(2) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(make_weight_law(5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_weight_law(5, 0.0), InvalidArgument);

  for (int n : {1, 7, 50, 300, 4096})
    for (double g : {0.1, 0.3, 0.5}) {
      auto l = make_weight_law(n, g);
      CHECK(std::abs(l.total_mass() - 1.0) <= 1e-12);
      CHECK(std::abs(l.moment(1)) <= 1e-12);
      CHECK(std::abs(l.moment(2) - 1.0) <= 1e-12);
    }
}

TEST_CASE("fourth moment of y against the cumulant formula") {
  // kurtosis of a Bernoulli sum: E y^4 = 3 + (1 - 6g(1-g)) / (n g (1-g))
  for (int n : {10, 50, 333})
    for (double g : {0.3, 0.5, 0.05}) {
      double exact = 3.0 + (1.0 - 6 * g * (1 - g)) / (n * g * (1 - g));
      CHECK(make_weight_law(n, g).moment(4) == doctest::Approx(exact).epsilon(1e-11));
    }
  // and the (2k-1)!! (1 + O(k^3/(g n))) shape with k=2 at n=50, g=0.3
  double m4 = make_weight_law(50, 0.3).moment(4);
  CHECK(m4 <= 3.0 * (1.0 + 8.0 / (0.3 * 50)));
}

TEST_CASE("binomial pmf matches exact rationals") {
  auto exact = rational_krawtchouk(12, 3, 10, 0).pmf;
  auto pmf = binomial_pmf(12, 0.3);
  for (int w = 0; w <= 12; ++w)
    CHECK(pmf[w] == doctest::Approx(exact[w].convert_to<double>()).epsilon(1e-14));
}

TEST_CASE("binomial pointwise lower bound holds with a small constant") {
  // pmf >= exp(-y^2/2 - c |y|^3 / sqrt(g n)) / sqrt(2n) on |y| <= 2 sqrt(log n)
  double c_needed = 0.0;
  for (int n : {10, 37, 100, 500, 2000})
    for (double g : {0.05, 0.2, 0.3, 0.5}) {
      auto law = make_weight_law(n, g);
      double tau = 2 * std::sqrt(std::log(double(n)));
      for (int w = 0; w <= n; ++w) {
        double y = law.y_of(w);
        if (std::abs(y) > tau || y == 0.0) continue;
        double slack = -y * y / 2 - std::log(law.prob(w) * std::sqrt(2.0 * n));
        c_needed = std::max(c_needed, slack * std::sqrt(g * n) / std::pow(std::abs(y), 3));
      }
    }
  MESSAGE("fitted constant c = " << c_needed);
  CHECK(c_needed <= 1.0);
}

TEST_CASE("krawtchouk low degrees") {
  KrawtchoukBasis b(20, 0.3);
  CHECK(b.max_degree() == 20);
  CHECK(b.eval(0, 1.7) == 1.0);
  CHECK(b.eval(1, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(b.eval(21, 0.0), InvalidArgument);
  CHECK_THROWS_AS(KrawtchoukBasis(10, 0.3, 11), InvalidArgument);
}

TEST_CASE("krawtchouk orthonormality by enumeration") {
  for (int n : {10, 20, 50, 128})
    for (double g : {0.3, 0.5}) {
      KrawtchoukBasis b(n, g);
      auto law = make_weight_law(n, g);
      const int K = std::min(n, 12);
      std::vector<std::vector<long double>> vals(n + 1, std::vector<long double>(K + 1));
      for (int w = 0; w <= n; ++w) b.values(law.y_of(w), vals[w]);
      double worst = 0.0;
      for (int a = 0; a <= K; ++a)
        for (int c = 0; c <= K; ++c) {
          long double s = 0;
          for (int w = 0; w <= n; ++w) s += law.prob(w) * vals[w][a] * vals[w][c];
          worst = std::max(worst, std::abs(double(s) - (a == c)));
        }
      CHECK(worst <= 1e-10);
    }
}

TEST_CASE("support values stay orthonormal up to degree n") {
  // exercises the reflection above n/2, where plain forward recurrence fails
  for (int n : {64, 256, 512})
    for (double g : {0.1, 0.3, 0.5}) {
      KrawtchoukBasis b(n, g);
      // the double pmf underflows at the far tail for small gamma
      std::vector<long double> nu(n + 1);
      for (int w = 0; w <= n; ++w)
        nu[w] = std::exp(std::lgamma(n + 1.0L) - std::lgamma(w + 1.0L) - std::lgamma(n - w + 1.0L) +
                         w * std::log((long double)g) + (n - w) * std::log1p(-(long double)g));
      std::vector<std::vector<long double>> vals(n + 1, std::vector<long double>(n + 1));
      for (int w = 0; w <= n; ++w) b.support_values(w, vals[w]);
      double worst = 0.0;
      for (int a = 0; a <= n; ++a)
        for (int c = a; c <= n; ++c) {
          long double s = 0;
          for (int w = 0; w <= n; ++w) s += nu[w] * vals[w][a] * vals[w][c];
          worst = std::max(worst, double(std::fabs(s - (a == c ? 1.0L : 0.0L))));
        }
      INFO("n=" << n << " gamma=" << g);
      CHECK(worst <= 1e-10);

      // a truncated basis gives the same prefix
      KrawtchoukBasis cut(n, g, n / 3);
      std::vector<long double> v(n / 3 + 1);
      for (int w = 0; w <= n; w += 7) {
        cut.support_values(w, v);
        for (int k = 0; k <= n / 3; ++k) CHECK(v[k] == vals[w][k]);
      }
    }
}

TEST_CASE("biased product coefficients have a closed form") {
  // E_pi Kr_l = sqrt(C(n,l)) r^l, r = eta / sqrt(g(1-g)), for Ber(g+eta) coordinates
  for (int n : {40, 256})
    for (double g : {0.3, 0.5}) {
      const double eta = 0.01;
      KrawtchoukBasis b(n, g);
      auto pi = WeightLaw::binomial(n, g, g + eta);
      std::vector<long double> acc(n + 1, 0.0L), v(n + 1);
      for (int w = 0; w <= n; ++w) {
        b.support_values(w, v);
        for (int l = 0; l <= n; ++l) acc[l] += pi.prob(w) * v[l];
      }
      const long double r = eta / std::sqrt(g * (1 - g));
      double worst = 0.0;
      for (int l = 0; l <= n; ++l) {
        const long double expect =
            std::exp(0.5L * (std::lgamma((long double)n + 1) - std::lgamma((long double)l + 1) -
                             std::lgamma((long double)(n - l) + 1)) +
                     l * std::log(r));
        worst = std::max(worst, double(std::fabs(acc[l] - expect)));
      }
      INFO("n=" << n << " gamma=" << g);
      CHECK(worst <= 1e-10);
    }
}

TEST_CASE("krawtchouk matches exact rational gram-schmidt") {
  const int n = 10;
  auto ref = rational_krawtchouk(n, 3, 10, n);
  KrawtchoukBasis b(n, 0.3);
  auto law = make_weight_law(n, 0.3);
  for (int k = 0; k <= n; ++k)
    for (int w = 0; w <= n; ++w) {
      Big v = Big(ref.values[k][w]) / mp::sqrt(Big(ref.norm2[k]));
      double expect = v.convert_to<double>();
      CHECK(b.eval(k, law.y_of(w)) == doctest::Approx(expect).epsilon(1e-11).scale(1.0));
    }
}

TEST_CASE("stieltjes construction agrees with closed-form recurrence") {
  for (int n : {30, 200})
    for (double g : {0.2, 0.5}) {
      auto law = make_weight_law(n, g);
      KrawtchoukBasis analytic(n, g);
      auto numeric = KrawtchoukBasis::from_law(law, 25);
      for (int k = 0; k <= 25; ++k) {
        CHECK(double(numeric.shifts()[k]) == doctest::Approx(double(analytic.shifts()[k])).scale(1.0).epsilon(1e-11));
        CHECK(double(numeric.norms()[k]) == doctest::Approx(double(analytic.norms()[k])).scale(1.0).epsilon(1e-11));
      }
    }
}

TEST_CASE("monomial coefficients reproduce evaluation and export") {
  KrawtchoukBasis b(40, 0.3);
  for (int k = 0; k <= 10; ++k) {
    auto c = b.monomial_coefficients(k);
    REQUIRE(c.size() == std::size_t(k + 1));
    for (double y : {-1.3, 0.2, 2.1}) {
      long double h = 0;
      for (int j = k; j >= 0; --j) h = h * y + c[j];
      CHECK(double(h) == doctest::Approx(b.eval(k, y)).epsilon(1e-10).scale(1.0));
    }
  }
  std::ostringstream os;
  b.write_csv(os, 3);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "degree,c0,c1,c2,c3");
  std::getline(is, line);
  CHECK(line.rfind("0,1,0,0,0", 0) == 0);
}

TEST_CASE("krawtchouk pointwise bound examples") {
  KrawtchoukBasis b200(200, 0.5);
  auto g2 = symmetric_grid(2.0, 401);
  auto r1 = verify_krawtchouk_bound(b200, 1, g2);
  CHECK(r1.max_ratio <= 1.01);
  CHECK(r1.max_ratio == doctest::Approx(std::sqrt(2.0) * std::exp(-0.5)).epsilon(1e-4));

  auto r50 = verify_krawtchouk_bound(b200, 50, symmetric_grid(2.4, 481));
  CHECK(r50.max_ratio <= 3.0);
  CHECK_FALSE(r50.within_validity);  // 2.4 > 200^{1/6}/2

  KrawtchoukBasis b30(30, 0.3);
  auto r15 = verify_krawtchouk_bound(b30, 15, symmetric_grid(1.7, 341));
  CHECK(std::isfinite(r15.max_ratio));
  CHECK(r15.max_ratio > 0.0);
}
