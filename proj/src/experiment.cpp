#include "ldtv/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <tuple>

#include "ldtv/binomial.hpp"
#include "ldtv/charfun.hpp"
#include "ldtv/core/error.hpp"
#include "ldtv/core/parallel.hpp"
#include "ldtv/ldlr.hpp"
#include "ldtv/models.hpp"
#include "ldtv/orthopoly.hpp"
#include "ldtv/subgraph.hpp"
#include "ldtv/symstats.hpp"

#ifndef LDTV_VERSION
#define LDTV_VERSION "0.0.0"
#endif

namespace ldtv {

namespace {

using json = nlohmann::json;

// --- text forms ----------------------------------------------------------------

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::optional<double> parse_real(const std::string& s) {
  if (s == "nan" || s == "auto") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return INFINITY;
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- schema ----------------------------------------------------------------------

enum class Type { kInt, kUint, kReal, kString, kReals, kStrings, kChoice };

struct Field {
  std::string key;
  Type type;
  std::string def;
  std::string help;
  std::vector<std::string> choices = {};
};

const char* type_name(Type t) {
  switch (t) {
    case Type::kInt: return "int";
    case Type::kUint: return "uint";
    case Type::kReal: return "real";
    case Type::kString: return "string";
    case Type::kReals: return "reals";
    case Type::kStrings: return "strings";
    case Type::kChoice: return "choice";
  }
  return "?";
}

const std::vector<Field>& common_fields() {
  static const std::vector<Field> f = {
      {"seed", Type::kUint, "1", "master seed"},
      {"threads", Type::kInt, "0", "worker threads (0: hardware)"},
  };
  return f;
}

const std::map<std::string, std::vector<Field>>& schemas() {
  static const std::map<std::string, std::vector<Field>> s = {
      {"ortho-verify",
       {{"n_list", Type::kReals, "10,20,50,128", "Krawtchouk sizes"},
        {"gamma_list", Type::kReals, "0.3,0.5", "null biases"},
        {"max_degree", Type::kInt, "12", "largest degree checked"},
        {"hermite_nodes", Type::kInt, "64", "Gauss-Hermite nodes for the Hermite check"},
        {"tol", Type::kReal, "1e-10", "max |<p_a,p_b> - delta_ab|"}}},
      {"binom-tv",
       {{"model", Type::kChoice, "biased", "planted weight law", {"biased", "conditioned"}},
        {"n", Type::kInt, "128", "string length"},
        {"gamma", Type::kReal, "0.3", "null bias"},
        {"eta", Type::kReal, "0.05", "planted bias shift (biased)"},
        {"weights", Type::kReals, "", "allowed weights (conditioned)"},
        {"eps_grid", Type::kReals, "0.1,0.2,0.3,0.5,0.7,0.9", "noise levels"},
        {"D", Type::kInt, "-1", "degree (-1: n)"},
        {"tau", Type::kReal, "auto", "truncation radius"},
        {"T", Type::kReal, "auto", "low/mid split degree"}}},
      {"ldlr",
       {{"model", Type::kChoice, "spiked_mean", "planted model",
         {"biased", "conditioned", "spiked_mean", "quadrature", "wigner_spike"}},
        {"n", Type::kInt, "100", "dimension"},
        {"gamma", Type::kReal, "0.5", "null bias (Boolean models)"},
        {"eta", Type::kReal, "0.05", "bias shift (biased)"},
        {"weights", Type::kReals, "", "allowed weights (conditioned)"},
        {"lambda", Type::kReal, "1", "signal strength"},
        {"m", Type::kInt, "2", "quadrature points (quadrature)"},
        {"sparsity", Type::kInt, "5", "spike support size (wigner_spike)"},
        {"D", Type::kInt, "4", "degree"},
        {"samples", Type::kUint, "20000", "Monte Carlo draws"}}},
      {"sym-tv",
       {{"model", Type::kChoice, "spiked_mean", "planted model", {"spiked_mean", "quadrature"}},
        {"n", Type::kInt, "100", "dimension"},
        {"k", Type::kInt, "2", "number of power-sum statistics"},
        {"eps", Type::kReal, "0.1", "OU noise"},
        {"lambda", Type::kReal, "1", "signal strength (spiked_mean)"},
        {"m", Type::kInt, "2", "quadrature points (quadrature)"},
        {"condition_ell", Type::kInt, "0", "keep only ell-regular draws (0: off)"},
        {"samples", Type::kUint, "20000", "draws per law"},
        {"bins", Type::kInt, "30", "histogram bins per axis"},
        {"radius", Type::kReal, "3", "frequency ball for the CF comparison"}}},
      {"cf-verify",
       {{"max_degree", Type::kInt, "4", "degrees 1..max_degree"},
        {"count", Type::kUint, "100", "polynomials per (degree, exponent)"},
        {"exponents", Type::kReals, "-1,0,1", "Var = k^{c k} for each c"},
        {"regime1_count", Type::kUint, "1000", "extra polynomials with Var <= 9^-k"},
        {"kappa", Type::kReal, "0.0625", "regime-2 constant"},
        {"large_C", Type::kReal, "2", "regime-3 threshold exponent"},
        {"c_prime", Type::kReal, "1", "regime-3 constant"}}},
      {"subgraph-tv",
       {{"preset", Type::kChoice, "sparse_pca", "sparse_pca derives lambda and sparsity from n",
         {"none", "sparse_pca"}},
        {"n", Type::kInt, "400", "matrix size"},
        {"lambda", Type::kReal, "auto", "spike strength (auto: n^0.3)"},
        {"sparsity", Type::kInt, "0", "spike support (0: round(n^0.4))"},
        {"eps", Type::kReal, "0.3", "OU noise"},
        {"patterns", Type::kStrings, "edge,two_path,triangle", "named patterns"},
        {"pattern_file", Type::kString, "", "extra pattern as an edge list"},
        {"compare", Type::kChoice, "nu", "nu: null counts vs noisy planted; surrogate: noisy planted vs Gaussian surrogate",
         {"nu", "surrogate"}},
        {"samples", Type::kUint, "4000", "draws per law"},
        {"bins", Type::kInt, "30", "histogram bins"},
        {"control_lambda", Type::kReal, "0", "positive control on the edge pattern (0: off)"}}},
      {"sweep",
       {{"base", Type::kChoice, "binom-tv", "experiment to repeat",
         {"ortho-verify", "binom-tv", "ldlr", "sym-tv", "cf-verify", "subgraph-tv"}},
        {"key", Type::kString, "n", "field varied"},
        {"values", Type::kStrings, "64,128,256", "values taken by the field"}}},
  };
  return s;
}

const Field* find_field(const std::string& kind, const std::string& key) {
  for (const auto& f : common_fields())
    if (f.key == key) return &f;
  auto it = schemas().find(kind);
  if (it == schemas().end()) return nullptr;
  for (const auto& f : it->second)
    if (f.key == key) return &f;
  return nullptr;
}

std::string canonical(const Field& f, const std::string& raw) {
  const std::string v = trim(raw);
  auto bad = [&] {
    return InvalidArgument("config: '" + f.key + "' expects " + type_name(f.type) + ", got '" + v +
                           "'");
  };
  switch (f.type) {
    case Type::kInt: {
      auto x = parse_int(v);
      if (!x) throw bad();
      return std::to_string(*x);
    }
    case Type::kUint: {
      auto x = parse_uint(v);
      if (!x) throw bad();
      return std::to_string(*x);
    }
    case Type::kReal: {
      if (v == "auto") return v;
      auto x = parse_real(v);
      if (!x) throw bad();
      return fmt(*x);
    }
    case Type::kString:
      return v;
    case Type::kReals: {
      std::string out;
      for (const auto& item : split_list(v)) {
        auto x = parse_real(item);
        if (!x || std::isnan(*x)) throw bad();
        out += (out.empty() ? "" : ",") + fmt(*x);
      }
      return out;
    }
    case Type::kStrings: {
      std::string out;
      for (const auto& item : split_list(v)) out += (out.empty() ? "" : ",") + item;
      return out;
    }
    case Type::kChoice:
      if (std::find(f.choices.begin(), f.choices.end(), v) == f.choices.end()) throw bad();
      return v;
  }
  return v;
}

// --- helpers for runs ------------------------------------------------------------------

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

template <class... T>
std::vector<std::string> cells(const T&... xs) {
  std::vector<std::string> out;
  auto one = [&](const auto& x) {
    using X = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<X, std::string>)
      out.push_back(x);
    else if constexpr (std::is_same_v<X, const char*>)
      out.push_back(x);
    else if constexpr (std::is_same_v<X, bool>)
      out.push_back(x ? "1" : "0");
    else if constexpr (std::is_integral_v<X>)
      out.push_back(std::to_string(x));
    else
      out.push_back(fmt(double(x)));
  };
  (one(xs), ...);
  return out;
}

std::vector<int> as_ints(const std::vector<double>& v, const std::string& what) {
  std::vector<int> out;
  for (double x : v) {
    require(x == std::floor(x), what + ": expected integers");
    out.push_back(int(x));
  }
  return out;
}

WeightLaw boolean_planted_law(const ExperimentConfig& c) {
  const int n = int(c.get_int("n"));
  const double gamma = c.get_real("gamma");
  const NullSpec base = BooleanProduct{n, gamma};
  if (c.get_string("model") == "conditioned") {
    auto w = as_ints(c.get_reals("weights"), "weights");
    require(!w.empty(), "conditioned model needs weights");
    return weight_law_of(PlantedSpec{WeightConditioned{w}, base});
  }
  const PlantedSpec spec{BiasedProduct{c.get_real("eta")}, base};
  validate(spec);
  return weight_law_of(spec);
}

void check(ResultRecord& r, bool ok, const std::string& what) {
  if (!ok) {
    r.checks_passed = false;
    r.failures.push_back(what);
  }
}

// --- experiments ---------------------------------------------------------------------------

void run_ortho(const ExperimentConfig& c, ResultRecord& r, Table& t) {
  const int kmax = int(c.get_int("max_degree"));
  const double tol = c.get_real("tol");
  t.columns = {"family", "n", "gamma", "max_degree", "max_error"};
  double worst = 0.0;
  for (int n : as_ints(c.get_reals("n_list"), "n_list")) {
    for (double gamma : c.get_reals("gamma_list")) {
      const int K = std::min(kmax, n);
      KrawtchoukBasis basis(n, gamma, K);
      const auto law = make_weight_law(n, gamma);
      std::vector<long double> v(K + 1);
      std::vector<long double> gram((K + 1) * (K + 1), 0.0L);
      for (int w = 0; w <= n; ++w) {
        const long double p = law.prob(w);
        if (p == 0.0L) continue;
        basis.support_values(w, v);
        for (int a = 0; a <= K; ++a)
          for (int b = 0; b <= a; ++b) gram[a * (K + 1) + b] += p * v[a] * v[b];
      }
      double err = 0.0;
      for (int a = 0; a <= K; ++a)
        for (int b = 0; b <= a; ++b)
          err = std::max(err, double(std::fabs(gram[a * (K + 1) + b] - (a == b ? 1.0L : 0.0L))));
      worst = std::max(worst, err);
      t.rows.push_back(cells(std::string("krawtchouk"), n, gamma, K, err));
      r.results.push_back({"krawtchouk_max_error", err, 0.0, n, -1.0});
      check(r, err <= tol, "krawtchouk orthonormality at n=" + std::to_string(n) + " gamma=" + fmt(gamma));
    }
  }
  const auto rule = gauss_hermite(int(c.get_int("hermite_nodes")));
  require(2 * kmax < 2 * int(rule.nodes.size()), "hermite_nodes too small for max_degree");
  std::vector<double> h(kmax + 1);
  std::vector<double> gram((kmax + 1) * (kmax + 1), 0.0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    hermite_values(rule.nodes[i], h);
    for (int a = 0; a <= kmax; ++a)
      for (int b = 0; b <= a; ++b) gram[a * (kmax + 1) + b] += rule.weights[i] * h[a] * h[b];
  }
  double err = 0.0;
  for (int a = 0; a <= kmax; ++a)
    for (int b = 0; b <= a; ++b)
      err = std::max(err, std::fabs(gram[a * (kmax + 1) + b] - (a == b ? 1.0 : 0.0)));
  t.rows.push_back(cells(std::string("hermite"), 0, 0.0, kmax, err));
  r.results.push_back({"hermite_max_error", err, 0.0, -1, -1.0});
  r.results.push_back({"max_error", std::max(worst, err), 0.0, -1, -1.0});
  check(r, err <= tol, "hermite orthonormality");
}

void run_binom(const ExperimentConfig& c, ResultRecord& r, Table& t) {
  const auto pi = boolean_planted_law(c);
  const int n = pi.n();
  int D = int(c.get_int("D"));
  if (D < 0) D = n;
  require(D <= n, "D must not exceed n");
  BoundOptions opts;
  opts.tau = c.get_real("tau");
  opts.T = c.get_real("T");
  auto grid = c.get_reals("eps_grid");
  require(!grid.empty(), "eps_grid is empty");
  std::sort(grid.begin(), grid.end());
  const auto rows = binomial_sweep(pi, grid, D, c.get_uint("seed"), opts);
  t.columns = {"n", "gamma", "eps", "D", "delta", "bound", "exact_tv", "mass_dropped", "seed"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = rows[i];
    t.rows.push_back(cells(s.n, s.gamma, s.eps, s.D, s.delta, s.bound, s.exact_tv, s.mass_dropped, s.seed));
    r.results.push_back({"bound", s.bound, 0.0, s.n, s.eps});
    r.results.push_back({"exact_tv", s.exact_tv, 0.0, s.n, s.eps});
    check(r, s.bound >= s.exact_tv - 1e-10, "soundness at eps=" + fmt(s.eps));
    if (i > 0) check(r, s.bound <= rows[i - 1].bound + 1e-12, "monotonicity at eps=" + fmt(s.eps));
  }
  if (!rows.empty()) r.results.push_back({"delta", rows.front().delta, 0.0, n, -1.0});
}

void run_ldlr(const ExperimentConfig& c, ResultRecord& r, Table& t) {
  const std::string model = c.get_string("model");
  const int n = int(c.get_int("n")), D = int(c.get_int("D"));
  const auto seed = c.get_uint("seed");
  const auto samples = c.get_uint("samples");
  AdvantageEstimate est;
  std::optional<double> oracle;
  if (model == "biased" || model == "conditioned") {
    const auto pi = boolean_planted_law(c);
    KrawtchoukBasis basis(n, c.get_real("gamma"), std::min(D, n));
    est = chi2_sym_boolean(pi, basis, std::min(D, n));
  } else if (model == "spiked_mean") {
    const double lam = c.get_real("lambda");
    est = chi2_sym_gaussian(Sampler(PlantedSpec{SpikedMean{lam}, GaussVector{n}}), D, samples, seed);
    if (n >= D) {
      // even degrees only: lambda^{2d} / d!
      double s = 0.0, term = 1.0;
      for (int d = 1; d <= D; ++d) {
        term *= lam * lam / d;
        if (d % 2 == 0) s += term;
      }
      oracle = s;
    }
  } else if (model == "quadrature") {
    est = chi2_sym_gaussian(Sampler(quadrature_product_spec(int(c.get_int("m")), n)), D, samples, seed);
  } else {
    const Sampler s(PlantedSpec{WignerSpike{c.get_real("lambda"), int(c.get_int("sparsity"))}, GaussWigner{n}});
    est = chi2_wigner_mc(s, multigraph_family(D), samples, seed);
  }
  t.columns = {"degree", "chi2_cumulative"};
  for (std::size_t d = 0; d < est.by_degree.size(); ++d)
    t.rows.push_back(cells(int(d + 1), est.by_degree[d]));
  r.results.push_back({"chi2", est.chi2, est.std_err, n, -1.0});
  r.results.push_back({"chi2_raw", est.chi2_raw, est.std_err, n, -1.0});
  r.results.push_back({"lower_bound_only", est.lower_bound_only ? 1.0 : 0.0, 0.0, n, -1.0});
  if (oracle) {
    r.results.push_back({"chi2_oracle", *oracle, 0.0, n, -1.0});
    check(r, std::fabs(est.chi2_raw - *oracle) <= 4.0 * est.std_err + 1e-12,
          "Monte Carlo chi2 within 4 stderr of the closed form");
  }
}

void run_symtv(const ExperimentConfig& c, ResultRecord& r, Table& t) {
  const int n = int(c.get_int("n"));
  const auto seed = c.get_uint("seed");
  const auto samples = c.get_uint("samples");
  FkSampling opts;
  opts.k = int(c.get_int("k"));
  opts.eps = c.get_real("eps");
  opts.condition_ell = int(c.get_int("condition_ell"));
  const Sampler null(NullSpec{GaussVector{n}});
  const Sampler planted(c.get_string("model") == "quadrature"
                            ? ModelSpec(quadrature_product_spec(int(c.get_int("m")), n))
                            : ModelSpec(PlantedSpec{SpikedMean{c.get_real("lambda")}, GaussVector{n}}));
  const auto a = sample_Fk(null, opts, samples, seed);
  const auto b = sample_Fk(planted, opts, samples, mix64(seed + 1));
  const auto tv = tv_histogram(a, b, int(c.get_int("bins")));
  const double R = c.get_real("radius");
  auto g0 = radial_grid(opts.k, R, 16, 16, seed);
  auto g1 = g0;
  empirical_cf(a, g0);
  empirical_cf(b, g1);
  const auto fm = frequency_match_diag(g0, g1, R);
  t.columns = {"n", "k", "eps", "tv", "bias_floor", "stderr", "cf_sup_diff", "cf_noise_floor"};
  t.rows.push_back(cells(n, opts.k, opts.eps, tv.tv, tv.bias_floor, tv.std_err, fm.sup_diff, fm.noise_floor));
  r.results.push_back({"tv", tv.tv, tv.std_err, n, opts.eps});
  r.results.push_back({"bias_floor", tv.bias_floor, 0.0, n, opts.eps});
  r.results.push_back({"cf_sup_diff", fm.sup_diff, fm.stderr_at_max, n, opts.eps});
}

void run_cf(const ExperimentConfig& c, ResultRecord& r, Table& t) {
  CfRegimeOptions opts;
  opts.kappa = c.get_real("kappa");
  opts.large_C = c.get_real("large_C");
  opts.c_prime = c.get_real("c_prime");
  const auto seed = c.get_uint("seed");
  const int K = int(c.get_int("max_degree"));
  require(K >= 1 && K <= 8, "max_degree must lie in [1,8]");
  t.columns = {"degree", "variance", "regime", "bound", "observed", "pass"};
  std::uint64_t idx = 0;
  int fails = 0, total = 0;
  auto one = [&](const HermitePoly& p) {
    const auto rep = verify_cf_regimes(p, opts);
    t.rows.push_back(cells(rep.degree, rep.variance, rep.regime, rep.bound, rep.observed, rep.pass));
    ++total;
    fails += !rep.pass;
  };
  for (int k = 1; k <= K; ++k)
    for (double e : c.get_reals("exponents"))
      for (std::uint64_t i = 0; i < c.get_uint("count"); ++i)
        one(random_hermite_poly(k, std::pow(double(k), e * k), seed, idx++));
  CounterRng pick(seed, Stream::kCorpus, ~0ull);
  for (std::uint64_t i = 0; i < c.get_uint("regime1_count"); ++i) {
    const int k = 1 + int(pick.below(std::min(K, 4)));
    one(random_hermite_poly(k, std::pow(9.0, -k) * pick.uniform(), seed, idx++));
  }
  // analytic oracles on t in [-5, 5]
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double s = -5.0 + 0.1 * i;
    worst = std::max(worst, std::fabs(std::abs(poly_cf(HermitePoly{{0.0, s}}).value) - std::exp(-s * s / 2)));
    std::vector<double> m = {0.0, 0.0, s};
    worst = std::max(worst, std::fabs(std::abs(poly_cf(HermitePoly::from_monomials(m)).value) -
                                      std::pow(1 + 4 * s * s, -0.25)));
  }
  r.results.push_back({"polynomials", double(total), 0.0, -1, -1.0});
  r.results.push_back({"failures", double(fails), 0.0, -1, -1.0});
  r.results.push_back({"oracle_max_error", worst, 0.0, -1, -1.0});
  check(r, fails == 0, std::to_string(fails) + " polynomials above their regime bound");
  check(r, worst <= 1e-8, "analytic characteristic-function oracles");
}

void run_subgraph(const ExperimentConfig& c, ResultRecord& r, Table& t) {
  const int n = int(c.get_int("n"));
  const bool preset = c.get_string("preset") == "sparse_pca";
  double lambda = c.get_real("lambda");
  int ell = int(c.get_int("sparsity"));
  if (std::isnan(lambda)) {
    require(preset, "lambda=auto needs preset=sparse_pca");
    lambda = std::pow(double(n), 0.3);
  }
  if (ell <= 0) {
    require(preset, "sparsity=0 needs preset=sparse_pca");
    ell = int(std::lround(std::pow(double(n), 0.4)));
  }
  const double eps = c.get_real("eps");
  const auto seed = c.get_uint("seed");
  const auto samples = c.get_uint("samples");
  const int bins = int(c.get_int("bins"));
  std::vector<GraphPattern> pats;
  for (const auto& name : c.get_strings("patterns")) pats.push_back(named_pattern(name));
  if (!c.get_string("pattern_file").empty()) {
    std::ifstream in(c.get_string("pattern_file"));
    require(bool(in), "cannot open pattern_file");
    pats.push_back(read_pattern(in, c.get_string("pattern_file")));
  }
  require(!pats.empty(), "no patterns");
  const bool vs_null = c.get_string("compare") == "nu";
  const Sampler null(NullSpec{GaussWigner{n}});
  auto tv_of = [&](const std::vector<double>& a, const std::vector<double>& b) {
    PointCloud pa{1, a.size(), a}, pb{1, b.size(), b};
    return tv_histogram(pa, pb, bins);
  };
  t.columns = {"pattern", "pattern_hash", "n", "eps", "lambda", "sparsity", "compare", "tv", "bias_floor", "stderr"};
  auto run_one = [&](const GraphPattern& p, double lam, const std::string& label) {
    const Sampler planted(PlantedSpec{WignerSpike{lam, ell}, GaussWigner{n}});
    TvHistogram tv;
    if (vs_null) {
      tv = tv_of(count_law(null, p, samples, mix64(seed ^ 0x5a)), noisy_count_law(planted, p, eps, samples, seed));
    } else {
      const auto L = noisy_count_laws(planted, p, eps, samples, seed);
      tv = tv_of(L.noisy, L.surrogate);
    }
    t.rows.push_back(cells(label, p.hash, n, eps, lam, ell, c.get_string("compare"), tv.tv, tv.bias_floor, tv.std_err));
    r.results.push_back({"tv_" + label, tv.tv, tv.std_err, n, eps});
    r.results.push_back({"bias_floor_" + label, tv.bias_floor, 0.0, n, eps});
    return tv;
  };
  for (const auto& p : pats) {
    const std::string label = p.name.empty() ? p.hash : p.name;
    const auto tv = run_one(p, lambda, label);
    if (vs_null)
      check(r, tv.tv <= tv.bias_floor + 3.0 * tv.std_err, label + ": TV above bias floor + 3 stderr");
  }
  const double control = c.get_real("control_lambda");
  if (control > 0.0) {
    const auto tv = run_one(named_pattern("edge"), control, "control_edge");
    check(r, tv.tv >= 0.5, "positive control: edge TV below 0.5");
  }
}

using Runner = std::function<void(const ExperimentConfig&, ResultRecord&, Table&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> m = {
      {"ortho-verify", run_ortho}, {"binom-tv", run_binom},   {"ldlr", run_ldlr},
      {"sym-tv", run_symtv},       {"cf-verify", run_cf},     {"subgraph-tv", run_subgraph},
  };
  return m;
}

ExperimentConfig sweep_child(const ExperimentConfig& c, const std::string& value) {
  ExperimentConfig child;
  child.experiment = c.get_string("base");
  for (const auto& [k, v] : c.values)
    if (k != "base" && k != "key" && k != "values") child.values[k] = v;
  child.values[c.get_string("key")] = value;
  return normalize_config(child);
}

}  // namespace

// --- config ------------------------------------------------------------------------------

std::string ExperimentConfig::get_string(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw InvalidArgument("config: missing key '" + key + "'");
  return it->second;
}

long long ExperimentConfig::get_int(const std::string& key) const {
  auto v = parse_int(get_string(key));
  if (!v) throw InvalidArgument("config: '" + key + "' is not an integer");
  return *v;
}

std::uint64_t ExperimentConfig::get_uint(const std::string& key) const {
  auto v = parse_uint(get_string(key));
  if (!v) throw InvalidArgument("config: '" + key + "' is not an unsigned integer");
  return *v;
}

double ExperimentConfig::get_real(const std::string& key) const {
  auto v = parse_real(get_string(key));
  if (!v) throw InvalidArgument("config: '" + key + "' is not a number");
  return *v;
}

std::vector<double> ExperimentConfig::get_reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(get_string(key))) {
    auto v = parse_real(s);
    if (!v) throw InvalidArgument("config: '" + key + "' has a non-numeric entry");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> ExperimentConfig::get_strings(const std::string& key) const {
  return split_list(get_string(key));
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : schemas()) out.push_back(name);
    return out;
  }();
  return k;
}

std::string describe_schema(const std::string& kind) {
  auto it = schemas().find(kind);
  require(it != schemas().end(), "unknown experiment '" + kind + "'");
  std::ostringstream os;
  auto line = [&](const Field& f) {
    os << f.key << "  " << type_name(f.type) << "  [" << f.def << "]  " << f.help;
    if (!f.choices.empty()) {
      os << " {";
      for (std::size_t i = 0; i < f.choices.size(); ++i) os << (i ? "," : "") << f.choices[i];
      os << '}';
    }
    os << '\n';
  };
  for (const auto& f : common_fields()) line(f);
  for (const auto& f : it->second) line(f);
  return os.str();
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    if (key == "experiment") {
      cfg.experiment = val;
    } else {
      if (cfg.values.count(key))
        throw InvalidArgument("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      cfg.values[key] = val;
    }
  }
  return cfg;
}

ExperimentConfig normalize_config(ExperimentConfig cfg) {
  if (!schemas().count(cfg.experiment))
    throw InvalidArgument("config: unknown experiment '" + cfg.experiment + "'");
  ExperimentConfig out;
  out.experiment = cfg.experiment;
  std::string base;
  if (cfg.experiment == "sweep") {
    base = cfg.values.count("base") ? trim(cfg.values["base"]) : "binom-tv";
    if (!schemas().count(base) || base == "sweep")
      throw InvalidArgument("config: sweep base must be a runnable experiment");
  }
  for (const auto& [k, v] : cfg.values) {
    const Field* f = find_field(cfg.experiment, k);
    if (!f && !base.empty()) f = find_field(base, k);
    if (!f) throw InvalidArgument("config: unknown key '" + k + "' for " + cfg.experiment);
    out.values[k] = canonical(*f, v);
  }
  auto fill = [&](const std::vector<Field>& fields) {
    for (const auto& f : fields)
      if (!out.values.count(f.key)) out.values[f.key] = canonical(f, f.def);
  };
  fill(common_fields());
  fill(schemas().at(cfg.experiment));
  if (!base.empty()) {
    fill(schemas().at(base));
    const Field* swept = find_field(base, out.values["key"]);
    if (!swept) throw InvalidArgument("config: sweep key '" + out.values["key"] + "' is not a field of " + base);
    for (const auto& v : split_list(out.values["values"])) canonical(*swept, v);
    if (split_list(out.values["values"]).empty()) throw InvalidArgument("config: sweep has no values");
  }
  return out;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "experiment = " << cfg.experiment << '\n';
  for (const auto& [k, v] : cfg.values) os << k << " = " << v << '\n';
  return os.str();
}

std::string record_stem(const ExperimentConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return cfg.experiment + "-" + hex16(h);
}

std::string tool_version() { return LDTV_VERSION; }

ResultRecord run_experiment(const ExperimentConfig& raw) {
  const auto cfg = normalize_config(raw);
  ResultRecord rec;
  rec.config = cfg;
  rec.version = tool_version();
  const auto start = std::chrono::steady_clock::now();
  const int threads = int(cfg.get_int("threads"));
  const int saved = default_threads();
  if (threads > 0) set_default_threads(threads);
  Table table;
  try {
    if (cfg.experiment == "sweep") {
      const std::string key = cfg.get_string("key");
      for (const auto& v : cfg.get_strings("values")) {
        auto child = run_experiment(sweep_child(cfg, v));
        // prefix the swept value unless the table already carries it
        const bool prefix =
            std::find(child.columns.begin(), child.columns.end(), key) == child.columns.end();
        if (table.columns.empty()) {
          table.columns = child.columns;
          if (prefix) table.columns.insert(table.columns.begin(), key);
        }
        for (auto& row : child.rows) {
          if (prefix) row.insert(row.begin(), child.config.get_string(key));
          table.rows.push_back(std::move(row));
        }
        for (auto res : child.results) {
          if (res.n < 0 && child.config.has("n")) res.n = child.config.get_int("n");
          if (res.eps < 0 && child.config.has("eps")) res.eps = child.config.get_real("eps");
          rec.results.push_back(res);
        }
        for (const auto& f : child.failures) rec.failures.push_back(key + "=" + v + ": " + f);
        rec.checks_passed = rec.checks_passed && child.checks_passed;
      }
    } else {
      runners().at(cfg.experiment)(cfg, rec, table);
    }
  } catch (const BudgetExceeded& e) {
    set_default_threads(saved);
    throw BudgetExceeded(cfg.experiment + ": " + e.what());
  } catch (const InvalidArgument& e) {
    set_default_threads(saved);
    throw InvalidArgument(cfg.experiment + ": " + e.what());
  } catch (const NumericalError& e) {
    set_default_threads(saved);
    throw NumericalError(cfg.experiment + ": " + e.what());
  }
  set_default_threads(saved);
  rec.columns = std::move(table.columns);
  rec.rows = std::move(table.rows);
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// --- records -------------------------------------------------------------------------------

namespace {

json result_json(const ResultValue& v) {
  json j = {{"name", v.name}, {"value", v.value}, {"stderr", v.std_err}};
  if (v.n >= 0) j["n"] = v.n;
  if (v.eps >= 0) j["eps"] = v.eps;
  return j;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

}  // namespace

std::string record_json(const ResultRecord& rec) {
  json j;
  j["tool"] = "ldtv";
  j["version"] = rec.version;
  j["experiment"] = rec.config.experiment;
  j["config"] = rec.config.values;
  j["results"] = json::array();
  for (const auto& v : rec.results) j["results"].push_back(result_json(v));
  j["table"] = {{"columns", rec.columns}, {"rows", rec.rows}};
  j["checks_passed"] = rec.checks_passed;
  j["failures"] = rec.failures;
  j["wall_time_s"] = rec.wall_time_s;
  return j.dump(2) + "\n";
}

std::string record_csv(const ResultRecord& rec) {
  std::ostringstream os;
  for (std::size_t i = 0; i < rec.columns.size(); ++i) os << (i ? "," : "") << csv_cell(rec.columns[i]);
  os << '\n';
  for (const auto& row : rec.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << '\n';
  }
  return os.str();
}

Report build_report(const std::vector<std::string>& paths) {
  Report rep;
  for (const auto& path : paths) {
    try {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("unreadable");
      const json j = json::parse(in);
      const std::string exp = j.at("experiment").get<std::string>();
      std::vector<ReportRow> rows;
      for (const auto& v : j.at("results")) {
        ReportRow r;
        r.experiment = exp;
        r.name = v.at("name").get<std::string>();
        r.value = v.at("value").is_null() ? NAN : v.at("value").get<double>();
        r.std_err = v.at("stderr").is_null() ? NAN : v.at("stderr").get<double>();
        r.n = v.value("n", -1LL);
        r.eps = v.value("eps", -1.0);
        if (r.n < 0 && j.at("config").contains("n"))
          r.n = parse_int(j["config"]["n"].get<std::string>()).value_or(-1);
        if (r.eps < 0 && j.at("config").contains("eps"))
          r.eps = parse_real(j["config"]["eps"].get<std::string>()).value_or(-1.0);
        r.source = path;
        rows.push_back(std::move(r));
      }
      rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    } catch (const std::exception& e) {
      rep.malformed.push_back(path + ": " + e.what());
    }
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.experiment, a.n, a.eps, a.source) < std::tie(b.experiment, b.n, b.eps, b.source);
  });
  return rep;
}

std::string report_table(const Report& r) {
  std::vector<std::vector<std::string>> grid = {{"experiment", "n", "eps", "name", "value", "stderr"}};
  for (const auto& row : r.rows)
    grid.push_back({row.experiment, row.n < 0 ? "-" : std::to_string(row.n),
                    row.eps < 0 ? "-" : fmt(row.eps), row.name, fmt(row.value), fmt(row.std_err)});
  std::vector<std::size_t> width(6, 0);
  for (const auto& g : grid)
    for (std::size_t i = 0; i < 6; ++i) width[i] = std::max(width[i], g[i].size());
  std::ostringstream os;
  for (const auto& g : grid) {
    for (std::size_t i = 0; i < 6; ++i) {
      os << g[i];
      if (i + 1 < 6) os << std::string(width[i] - g[i].size() + 2, ' ');
    }
    os << '\n';
  }
  for (const auto& m : r.malformed) os << "malformed: " << m << '\n';
  return os.str();
}

std::string report_csv(const Report& r) {
  std::ostringstream os;
  os << "experiment,n,eps,name,value,stderr,source\n";
  for (const auto& row : r.rows)
    os << csv_cell(row.experiment) << ',' << (row.n < 0 ? "" : std::to_string(row.n)) << ','
       << (row.eps < 0 ? "" : fmt(row.eps)) << ',' << csv_cell(row.name) << ',' << fmt(row.value)
       << ',' << fmt(row.std_err) << ',' << csv_cell(row.source) << '\n';
  return os.str();
}

}  // namespace ldtv
