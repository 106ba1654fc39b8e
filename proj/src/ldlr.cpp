#include "ldtv/ldlr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "ldtv/core/error.hpp"
#include "ldtv/core/parallel.hpp"

namespace ldtv {

std::vector<long double> krawtchouk_coefficients(const WeightLaw& pi, const KrawtchoukBasis& basis,
                                                 int D) {
  require(pi.n() == basis.n(), "krawtchouk_coefficients: n mismatch");
  if (D > basis.max_degree()) throw InvalidArgument("krawtchouk_coefficients: D exceeds basis degree");
  std::vector<long double> a(D + 1, 0.0L), v(D + 1);
  for (int w = 0; w <= pi.n(); ++w) {
    const double p = pi.prob(w);
    if (p == 0.0) continue;
    basis.support_values(w, v);
    for (int l = 0; l <= D; ++l) a[l] += p * v[l];
  }
  return a;
}

AdvantageEstimate chi2_sym_boolean(const WeightLaw& pi, const KrawtchoukBasis& basis, int D) {
  if (D > pi.n()) throw InvalidArgument("chi2_sym_boolean: D exceeds n");
  require(D >= 0, "chi2_sym_boolean: negative D");
  auto a = krawtchouk_coefficients(pi, basis, D);
  AdvantageEstimate est;
  est.D = D;
  est.method = Method::kExact;
  est.coeffs.D = D;
  long double s = 0.0L;
  for (int l = 1; l <= D; ++l) {
    s += a[l] * a[l];
    est.by_degree.push_back(double(s));
    est.coeffs.entries.push_back({"kr" + std::to_string(l), l, double(a[l]), 0.0});
  }
  est.chi2 = est.chi2_raw = double(s);
  return est;
}

double chi2_full(const WeightLaw& pi, const WeightLaw& nu) {
  require(pi.n() == nu.n(), "chi2_full: n mismatch");
  long double s = 0.0L;
  for (int w = 0; w <= pi.n(); ++w) {
    const long double d = (long double)pi.prob(w) - nu.prob(w);
    if (nu.prob(w) == 0.0) {
      if (pi.prob(w) != 0.0) return INFINITY;
      continue;
    }
    s += d * d / nu.prob(w);
  }
  return double(s);
}

// ---------------------------------------------------------------------------

std::vector<std::vector<int>> partitions_up_to(int D) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int, int)> rec = [&](int remaining, int max_part) {
    if (remaining == 0) {
      out.push_back(cur);
      return;
    }
    for (int k = std::min(remaining, max_part); k >= 1; --k) {
      cur.push_back(k);
      rec(remaining - k, k);
      cur.pop_back();
    }
  };
  for (int m = 1; m <= D; ++m) rec(m, m);
  return out;
}

namespace {

std::string partition_name(const std::vector<int>& p) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? " " : "") << p[i];
  os << ")";
  return os.str();
}

int partition_size(const std::vector<int>& p) {
  int s = 0;
  for (int k : p) s += k;
  return s;
}

// Accumulates per-sample feature vectors separately for the two halves
// (even / odd sample index).
struct SplitAccumulator {
  std::uint64_t count[2] = {0, 0};
  Eigen::VectorXd sum[2];
  Eigen::MatrixXd outer[2];

  explicit SplitAccumulator(int p = 0) {
    for (int h = 0; h < 2; ++h) {
      sum[h] = Eigen::VectorXd::Zero(p);
      outer[h] = Eigen::MatrixXd::Zero(p, p);
    }
  }
  void add(int half, const Eigen::VectorXd& v) {
    ++count[half];
    sum[half] += v;
    outer[half].selfadjointView<Eigen::Lower>().rankUpdate(v);
  }
  static SplitAccumulator merge(SplitAccumulator a, const SplitAccumulator& b) {
    for (int h = 0; h < 2; ++h) {
      a.count[h] += b.count[h];
      a.sum[h] += b.sum[h];
      a.outer[h] += b.outer[h];
    }
    return a;
  }
};

// Fills the estimate from the split accumulator; `names` and `degrees` label
// the features.
void finish(AdvantageEstimate& est, const SplitAccumulator& acc, const std::vector<std::string>& names,
            const std::vector<int>& degrees) {
  const Eigen::Index p = Eigen::Index(names.size());
  require(acc.count[0] >= 2 && acc.count[1] >= 2, "split-sample estimate needs >= 4 samples");
  Eigen::VectorXd mean[2];
  Eigen::MatrixXd cov[2];
  double m[2];
  for (int h = 0; h < 2; ++h) {
    m[h] = double(acc.count[h]);
    mean[h] = acc.sum[h] / m[h];
    Eigen::MatrixXd o = acc.outer[h].selfadjointView<Eigen::Lower>();
    cov[h] = (o - m[h] * mean[h] * mean[h].transpose()) / (m[h] - 1.0);
  }
  const Eigen::VectorXd& a = mean[0];
  const Eigen::VectorXd& b = mean[1];
  double raw = a.dot(b);
  double var = b.dot(cov[0] * b) / m[0] + a.dot(cov[1] * a) / m[1] +
               (cov[0].cwiseProduct(cov[1])).sum() / (m[0] * m[1]);
  est.chi2_raw = raw;
  est.chi2 = std::max(0.0, raw);
  est.std_err = std::sqrt(std::max(0.0, var));
  est.samples = acc.count[0] + acc.count[1];
  est.by_degree.assign(est.D, 0.0);
  for (Eigen::Index i = 0; i < p; ++i)
    for (int d = degrees[i]; d <= est.D; ++d) est.by_degree[d - 1] += a[i] * b[i];
  const double mt = m[0] + m[1];
  est.coeffs.D = est.D;
  for (Eigen::Index i = 0; i < p; ++i) {
    double pooled = (acc.sum[0][i] + acc.sum[1][i]) / mt;
    double second = (acc.outer[0](i, i) + acc.outer[1](i, i)) / mt;
    double v = std::max(0.0, (second - pooled * pooled) * mt / (mt - 1.0));
    est.coeffs.entries.push_back({names[i], degrees[i], pooled, std::sqrt(v / mt)});
  }
}

}  // namespace

SymmetricHermite::SymmetricHermite(int n, int D) : n_(n), D_(D) {
  require(n >= 1, "SymmetricHermite: n must be >= 1");
  require(D >= 1 && D <= 12, "SymmetricHermite: D must lie in [1,12]");
  // generating-function states include the empty partition
  std::vector<std::vector<int>> states{{}};
  for (auto& p : partitions_up_to(D)) states.push_back(p);
  std::map<std::vector<int>, int> index;
  for (int i = 0; i < int(states.size()); ++i) index[states[i]] = i;
  size_.resize(states.size());
  children_.resize(states.size());
  for (int i = 0; i < int(states.size()); ++i) {
    size_[i] = partition_size(states[i]);
    int last = -1;
    for (std::size_t j = 0; j < states[i].size(); ++j) {
      int k = states[i][j];
      if (k == last) continue;
      last = k;
      auto child = states[i];
      child.erase(child.begin() + long(j));
      children_[i].push_back({k, index.at(child)});
    }
  }
  for (int i = 1; i < int(states.size()); ++i) {
    const auto& p = states[i];
    const int r = int(p.size());
    if (r > n) continue;
    double log_orbit = std::lgamma(n + 1.0) - std::lgamma(n - r + 1.0);
    std::map<int, int> mult;
    for (int k : p) mult[k]++;
    for (auto [k, c] : mult) log_orbit -= std::lgamma(c + 1.0);
    parts_.push_back(p);
    log_orbit_.push_back(log_orbit);
    inv_sqrt_orbit_.push_back(std::exp(-0.5 * log_orbit));
    state_of_part_.push_back(i);
  }
}

void SymmetricHermite::evaluate(std::span<const double> x, std::span<double> out) const {
  require(int(x.size()) == n_, "SymmetricHermite: wrong input size");
  require(out.size() == parts_.size(), "SymmetricHermite: wrong output size");
  const int S = int(size_.size());
  std::vector<double> state(S, 0.0);
  state[0] = 1.0;
  std::vector<double> h(D_ + 1);
  for (double xj : x) {
    hermite_values(xj, h);
    // states are ordered by size, so walking backwards reads old values
    for (int i = S - 1; i >= 1; --i) {
      double add = 0.0;
      for (auto [k, c] : children_[i]) add += h[k] * state[c];
      state[i] += add;
    }
  }
  for (std::size_t i = 0; i < parts_.size(); ++i) out[i] = state[state_of_part_[i]] * inv_sqrt_orbit_[i];
}

AdvantageEstimate chi2_sym_gaussian(const Sampler& planted, int D, std::uint64_t samples,
                                    std::uint64_t seed) {
  require(planted.domain() == Domain::kVector, "chi2_sym_gaussian: needs a Gaussian-vector model");
  return chi2_sym_gaussian(
      planted.n(), [&](std::uint64_t i, std::span<double> x) { planted.draw_vector(seed, i, x); },
      true, D, samples, seed);
}

AdvantageEstimate chi2_sym_gaussian(int n, const VectorDraw& draw, bool symmetric, int D,
                                    std::uint64_t samples, std::uint64_t seed) {
  require(D >= 1 && D <= 12, "chi2_sym_gaussian: D must lie in [1,12]");
  require(samples >= 4, "chi2_sym_gaussian: need at least 4 samples");
  SymmetricHermite basis(n, D);
  const int P = int(basis.partitions().size());
  auto parts = map_chunks<SplitAccumulator>(samples, [&](std::uint64_t b, std::uint64_t e) {
    SplitAccumulator acc(P);
    std::vector<double> x(n);
    Eigen::VectorXd psi(P);
    for (auto i = b; i < e; ++i) {
      draw(i, x);
      basis.evaluate(x, {psi.data(), std::size_t(P)});
      acc.add(int(i & 1u), psi);
    }
    return acc;
  }, std::max(kChunkSize, (samples + 63) / 64));
  auto acc = reduce_pairwise(std::move(parts), [](SplitAccumulator a, SplitAccumulator b) {
    return SplitAccumulator::merge(std::move(a), b);
  });
  AdvantageEstimate est;
  est.D = D;
  est.method = Method::kMc;
  est.seed = seed;
  est.lower_bound_only = !symmetric;
  std::vector<std::string> names;
  std::vector<int> degrees;
  for (auto& p : basis.partitions()) {
    names.push_back(partition_name(p));
    degrees.push_back(partition_size(p));
  }
  finish(est, acc, names, degrees);
  return est;
}

std::vector<double> wigner_basis_values(const InjectiveSums& engine, const Eigen::MatrixXd& M) {
  auto sums = engine.evaluate(hermite_entry_powers(M, engine.max_multiplicity()));
  const int n = int(M.rows());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const auto& g = engine.shapes()[i];
    sums[i] /= std::sqrt(double(automorphism_count(g)) * falling_factorial(n, g.vertices));
  }
  return sums;
}

AdvantageEstimate chi2_wigner_mc(const Sampler& planted, const std::vector<Multigraph>& family,
                                 std::uint64_t samples, std::uint64_t seed, double flop_budget) {
  require(planted.domain() == Domain::kMatrix, "chi2_wigner_mc: needs a Wigner model");
  return chi2_wigner_mc(
      planted.n(), [&](std::uint64_t i, Eigen::MatrixXd& m) { planted.draw_matrix(seed, i, m); },
      family, samples, seed, flop_budget);
}

AdvantageEstimate chi2_wigner_mc(int n, const MatrixDraw& draw, const std::vector<Multigraph>& family,
                                 std::uint64_t samples, std::uint64_t seed, double flop_budget) {
  require(!family.empty(), "chi2_wigner_mc: empty shape family");
  require(samples >= 4, "chi2_wigner_mc: need at least 4 samples");
  InjectiveSums engine(family, n, flop_budget);
  std::vector<double> norm(family.size());
  int D = 0;
  std::vector<std::string> names;
  std::vector<int> degrees;
  for (std::size_t i = 0; i < family.size(); ++i) {
    norm[i] = 1.0 / std::sqrt(double(automorphism_count(family[i])) *
                              falling_factorial(n, family[i].vertices));
    names.push_back(family[i].descriptor());
    degrees.push_back(family[i].total_multiplicity());
    D = std::max(D, degrees.back());
  }
  const int P = int(family.size());
  // smaller chunks: each matrix sample is expensive
  auto parts = map_chunks<SplitAccumulator>(
      samples,
      [&](std::uint64_t b, std::uint64_t e) {
        SplitAccumulator acc(P);
        Eigen::MatrixXd m(n, n);
        Eigen::VectorXd psi(P);
        for (auto i = b; i < e; ++i) {
          draw(i, m);
          auto s = engine.evaluate(hermite_entry_powers(m, engine.max_multiplicity()));
          for (int k = 0; k < P; ++k) psi[k] = s[k] * norm[k];
          acc.add(int(i & 1u), psi);
        }
        return acc;
      },
      16);
  auto acc = reduce_pairwise(std::move(parts), [](SplitAccumulator a, SplitAccumulator b) {
    return SplitAccumulator::merge(std::move(a), b);
  });
  AdvantageEstimate est;
  est.D = D;
  est.method = Method::kMc;
  est.seed = seed;
  est.lower_bound_only = true;
  finish(est, acc, names, degrees);
  return est;
}

void write_coeffs_csv(std::ostream& os, const BasisCoeffs& coeffs) {
  auto old = os.precision(17);
  os << "index,degree,estimate,stderr\n";
  for (auto& e : coeffs.entries)
    os << '"' << e.index << '"' << ',' << e.degree << ',' << e.estimate << ',' << e.std_err << '\n';
  os.precision(old);
}

}  // namespace ldtv
