#include "ldtv/subgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "ldtv/core/error.hpp"
#include "ldtv/core/parallel.hpp"
#include "ldtv/core/rng.hpp"
#include "ldtv/multigraph.hpp"

namespace ldtv {

namespace {

Multigraph as_multigraph(const GraphPattern& t) {
  Multigraph g;
  g.vertices = t.vertices;
  for (auto [u, v] : t.edges) g.edges.push_back({u, v, 1});
  return g;
}

std::string fnv_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& closed_descriptors() {
  static const std::vector<std::string> d = [] {
    const std::vector<std::vector<std::array<int, 3>>> shapes = {
        {{0, 1, 1}},
        {{0, 1, 1}, {1, 2, 1}},
        {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}},
        {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {0, 3, 1}}};
    std::vector<std::string> out;
    for (const auto& e : shapes) {
      Multigraph g;
      g.vertices = e.size() == 1 ? 2 : e.size() == 2 ? 3 : int(e.size());
      g.edges = e;
      out.push_back(canonical_form(g).descriptor());
    }
    return out;
  }();
  return d;
}

Eigen::MatrixXd zero_diag(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd A = M;
  A.diagonal().setZero();
  return A;
}

void check_matrix(const Eigen::MatrixXd& M, const GraphPattern& t) {
  require(M.rows() == M.cols(), "subgraph: matrix must be square");
  require(t.vertices > 0, "subgraph: empty pattern");
  require(M.rows() >= t.vertices, "subgraph: n smaller than the pattern");
}

// --- copy enumeration -------------------------------------------------------

std::vector<std::vector<int>> automorphisms(const GraphPattern& t) {
  std::vector<int> perm(t.vertices);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  auto key = [&](const std::vector<int>& p) {
    std::vector<std::pair<int, int>> e;
    for (auto [u, v] : t.edges) e.emplace_back(std::min(p[u], p[v]), std::max(p[u], p[v]));
    std::sort(e.begin(), e.end());
    return e;
  };
  do {
    if (key(perm) == t.edges) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

constexpr double kBruteBudget = 5e8;

// Calls fn(phi) once per distinct copy: phi is the lexicographically
// smallest injection in its automorphism orbit.
template <class Fn>
void for_each_copy(const GraphPattern& t, int n, Fn&& fn) {
  const int v = t.vertices;
  if (std::pow(double(n), v) > kBruteBudget)
    throw BudgetExceeded("subgraph: brute-force enumeration too large for n = " + std::to_string(n));
  const auto auts = automorphisms(t);
  std::vector<int> phi(v), img(v);
  std::vector<char> used(n, 0);
  auto minimal = [&] {
    for (const auto& s : auts) {
      for (int i = 0; i < v; ++i) img[i] = phi[s[i]];
      if (std::lexicographical_compare(img.begin(), img.end(), phi.begin(), phi.end())) return false;
    }
    return true;
  };
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == v) {
      if (minimal()) fn(std::as_const(phi));
      return;
    }
    for (int a = 0; a < n; ++a) {
      if (used[a]) continue;
      used[a] = 1;
      phi[depth] = a;
      self(self, depth + 1);
      used[a] = 0;
    }
  };
  rec(rec, 0);
}

double brute_chi(const Eigen::MatrixXd& M, const GraphPattern& t) {
  const int n = int(M.rows());
  double s = 0.0;
  for_each_copy(t, n, [&](const std::vector<int>& phi) {
    double p = 1.0;
    for (auto [u, v] : t.edges) p *= M(phi[u], phi[v]);
    s += p;
  });
  return s / std::sqrt(t.labeling_count(n));
}

// leave-one-out products over the copy's edge values
void brute_derivs(const Eigen::MatrixXd& M, const GraphPattern& t, const Eigen::MatrixXd* H,
                  Eigen::MatrixXd& out) {
  const int n = int(M.rows()), e = t.edge_count();
  out.setZero(n, n);
  std::vector<double> w(e);
  std::vector<std::pair<int, int>> pr(e);
  for_each_copy(t, n, [&](const std::vector<int>& phi) {
    for (int i = 0; i < e; ++i) {
      pr[i] = {phi[t.edges[i].first], phi[t.edges[i].second]};
      w[i] = M(pr[i].first, pr[i].second);
    }
    for (int i = 0; i < e; ++i) {
      double acc = 0.0;
      if (!H) {
        acc = 1.0;
        for (int j = 0; j < e; ++j)
          if (j != i) acc *= w[j];
      } else {
        for (int j = 0; j < e; ++j) {
          if (j == i) continue;
          double p = (*H)(pr[j].first, pr[j].second);
          for (int k = 0; k < e; ++k)
            if (k != i && k != j) p *= w[k];
          acc += p;
        }
      }
      out(pr[i].first, pr[i].second) += acc;
      out(pr[i].second, pr[i].first) += acc;
    }
  });
  out /= std::sqrt(t.labeling_count(n));
}

// --- closed forms -------------------------------------------------------------

double triangle_sum(const Eigen::MatrixXd& M) {
  const Eigen::Index n = M.rows();
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j + 1 < n; ++j) {
      const double mij = M(j, i);
      if (mij == 0.0) continue;
      const Eigen::Index len = n - j - 1;
      s += mij * M.col(i).segment(j + 1, len).dot(M.col(j).segment(j + 1, len));
    }
  return s;
}

Eigen::VectorXd offdiag_row_sums(const Eigen::MatrixXd& M) {
  return M.colwise().sum().transpose() - M.diagonal();
}

double closed_chi(const Eigen::MatrixXd& M, const GraphPattern& t) {
  const int n = int(M.rows());
  const double L = t.labeling_count(n);
  switch (t.closed_form) {
    case 1: {
      double s = 0.0;
      for (int j = 1; j < n; ++j) s += M.col(j).head(j).sum();
      return s / std::sqrt(L);
    }
    case 2: {
      const Eigen::VectorXd r = offdiag_row_sums(M);
      const Eigen::VectorXd q = M.colwise().squaredNorm().transpose() - M.diagonal().cwiseAbs2();
      return 0.5 * (r.squaredNorm() - q.sum()) / std::sqrt(L);
    }
    case 3:
      return triangle_sum(M) / std::sqrt(L);
    case 4: {
      const Eigen::MatrixXd A = zero_diag(M);
      const Eigen::MatrixXd A2 = A * A;
      const double I = A2.squaredNorm() - 2.0 * A2.diagonal().squaredNorm() + A.array().pow(4).sum();
      return I / (8.0 * std::sqrt(L));
    }
    default:
      throw InvalidArgument("chi_theta: no closed form for this pattern");
  }
}

Eigen::MatrixXd closed_gradient(const Eigen::MatrixXd& M, const GraphPattern& t) {
  const int n = int(M.rows());
  const double s = 1.0 / std::sqrt(t.labeling_count(n));
  Eigen::MatrixXd g;
  switch (t.closed_form) {
    case 1:
      g = Eigen::MatrixXd::Constant(n, n, s);
      break;
    case 2: {
      const Eigen::VectorXd r = offdiag_row_sums(M);
      g = (r.replicate(1, n) + r.transpose().replicate(n, 1) - 2.0 * M) * s;
      break;
    }
    case 3: {
      const Eigen::MatrixXd A = zero_diag(M);
      g.noalias() = A * A;
      g *= s;
      break;
    }
    case 4: {
      const Eigen::MatrixXd A = zero_diag(M);
      const Eigen::MatrixXd A2 = A * A;
      const Eigen::VectorXd d = A2.diagonal();
      g.noalias() = A2 * A;
      g.array() -= A.array() * (d.replicate(1, n) + d.transpose().replicate(n, 1)).array();
      g.array() += A.array().cube();
      g *= s;
      break;
    }
    default:
      throw InvalidArgument("chi_gradient: no closed form for this pattern");
  }
  g.diagonal().setZero();
  return g;
}

Eigen::MatrixXd closed_hessian(const Eigen::MatrixXd& M, const GraphPattern& t,
                               const Eigen::MatrixXd& H0) {
  const int n = int(M.rows());
  const double s = 1.0 / std::sqrt(t.labeling_count(n));
  const Eigen::MatrixXd H = zero_diag(H0);
  Eigen::MatrixXd out;
  switch (t.closed_form) {
    case 1:
      out = Eigen::MatrixXd::Zero(n, n);
      break;
    case 2: {
      const Eigen::VectorXd h = H.colwise().sum().transpose();
      out = (h.replicate(1, n) + h.transpose().replicate(n, 1) - 2.0 * H) * s;
      break;
    }
    case 3: {
      const Eigen::MatrixXd A = zero_diag(M);
      Eigen::MatrixXd AH;
      AH.noalias() = A * H;
      out = (AH + AH.transpose()) * s;
      break;
    }
    case 4: {
      const Eigen::MatrixXd A = zero_diag(M);
      const Eigen::MatrixXd A2 = A * A;
      Eigen::MatrixXd AH;
      AH.noalias() = A * H;
      const Eigen::VectorXd d = A2.diagonal();
      const Eigen::VectorXd dd = 2.0 * (A.array() * H.array()).colwise().sum().transpose();
      Eigen::MatrixXd X;
      X.noalias() = A2 * H;
      out = X + X.transpose();
      out.noalias() += AH * A;
      out.array() -= H.array() * (d.replicate(1, n) + d.transpose().replicate(n, 1)).array();
      out.array() -= A.array() * (dd.replicate(1, n) + dd.transpose().replicate(n, 1)).array();
      out.array() += 3.0 * A.array().square() * H.array();
      out *= s;
      break;
    }
    default:
      throw InvalidArgument("chi_hessian_apply: no closed form for this pattern");
  }
  out.diagonal().setZero();
  return out;
}

// --- injective-sum engine, cached per (pattern, n) ------------------------------

const InjectiveSums& engine_for(const GraphPattern& t, int n) {
  static std::mutex mu;
  static std::map<std::pair<std::string, int>, std::unique_ptr<InjectiveSums>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{t.hash, n}];
  if (!slot) slot = std::make_unique<InjectiveSums>(std::vector<Multigraph>{as_multigraph(t)}, n);
  return *slot;
}

double injective_chi(const Eigen::MatrixXd& M, const GraphPattern& t) {
  const int n = int(M.rows());
  const auto& eng = engine_for(t, n);
  std::vector<Eigen::MatrixXd> p(2);
  p[1] = zero_diag(M);
  const double ordered = eng.evaluate(p)[0];
  return ordered / (double(t.aut) * std::sqrt(t.labeling_count(n)));
}

// --- sampling helpers -----------------------------------------------------------

void noisy_matrix(const Eigen::MatrixXd& M, double eps, std::uint64_t seed, std::uint64_t index,
                  Eigen::MatrixXd& G, Eigen::MatrixXd& out) {
  CounterRng rng(seed, Stream::kNoise, index);
  G.resize(M.rows(), M.cols());
  fill_wigner(rng, G);
  out = std::sqrt(1.0 - eps) * M + std::sqrt(eps) * G;
}

double exact_generic_sigma2(const Eigen::MatrixXd& M, const GraphPattern& t, double eps) {
  const int n = int(M.rows()), e = t.edge_count();
  const double L = t.labeling_count(n);
  if (L * std::ldexp(1.0, e) > 4e7)
    throw BudgetExceeded("sigma2: exact enumeration too large; use Monte Carlo mode");
  using Key = unsigned __int128;
  struct KeyHash {
    std::size_t operator()(Key k) const {
      return std::size_t(mix64(std::uint64_t(k) ^ mix64(std::uint64_t(k >> 64))));
    }
  };
  std::unordered_map<Key, double, KeyHash> acc;
  std::vector<int> ids(e), sub;
  std::vector<double> w(e);
  for_each_copy(t, n, [&](const std::vector<int>& phi) {
    for (int i = 0; i < e; ++i) {
      int a = phi[t.edges[i].first], b = phi[t.edges[i].second];
      if (a > b) std::swap(a, b);
      ids[i] = a * 64 + b + 1;
      w[i] = M(a, b);
    }
    for (unsigned mask = 1; mask < (1u << e); ++mask) {
      sub.clear();
      double p = 1.0;
      for (int i = 0; i < e; ++i) {
        if (mask >> i & 1u)
          sub.push_back(ids[i]);
        else
          p *= w[i];
      }
      std::sort(sub.begin(), sub.end());
      Key k = 0;
      for (int id : sub) k = (k << 12) | Key(id);
      acc[k] += p;
    }
  });
  double total = 0.0;
  for (const auto& [k, val] : acc) {
    int size = 0;
    for (Key x = k; x != 0; x >>= 12) ++size;
    total += std::pow(eps, size) * std::pow(1.0 - eps, e - size) * val * val;
  }
  return total / L;
}

}  // namespace

// ---------------------------------------------------------------------------

double GraphPattern::labeling_count(int n) const {
  require(n >= vertices, "labeling_count: n smaller than the pattern");
  return falling_factorial(n, vertices) / double(aut);
}

GraphPattern make_pattern(std::vector<std::pair<int, int>> edges, std::string name) {
  require(!edges.empty(), "make_pattern: no edges");
  int v = 0;
  for (auto& [a, b] : edges) {
    require(a >= 0 && b >= 0, "make_pattern: negative vertex id");
    require(a != b, "make_pattern: self-loop");
    if (a > b) std::swap(a, b);
    v = std::max(v, b + 1);
  }
  std::sort(edges.begin(), edges.end());
  require(std::adjacent_find(edges.begin(), edges.end()) == edges.end(),
          "make_pattern: repeated edge");
  require(v <= 8, "make_pattern: at most 8 vertices");
  GraphPattern t;
  t.vertices = v;
  t.edges = std::move(edges);
  t.name = std::move(name);
  const Multigraph g = as_multigraph(t);
  std::vector<char> seen(v, 0);
  for (auto [a, b] : t.edges) seen[a] = seen[b] = 1;
  require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }),
          "make_pattern: isolated vertex");
  require(g.connected(), "make_pattern: pattern must be connected");
  t.aut = automorphism_count(g);
  const std::string desc = canonical_form(g).descriptor();
  t.hash = fnv_hex(desc);
  const auto& closed = closed_descriptors();
  for (std::size_t i = 0; i < closed.size(); ++i)
    if (desc == closed[i]) t.closed_form = int(i) + 1;
  return t;
}

GraphPattern read_pattern(std::istream& is, std::string name) {
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int a = 0, b = 0;
    std::string rest;
    if (!(ls >> a >> b) || (ls >> rest))
      throw InvalidArgument("read_pattern: bad edge on line " + std::to_string(lineno));
    edges.emplace_back(a, b);
  }
  return make_pattern(std::move(edges), std::move(name));
}

GraphPattern named_pattern(const std::string& name) {
  if (name == "edge") return make_pattern({{0, 1}}, "edge");
  if (name == "two_path" || name == "2path") return make_pattern({{0, 1}, {1, 2}}, "two_path");
  if (name == "triangle") return make_pattern({{0, 1}, {1, 2}, {0, 2}}, "triangle");
  if (name == "four_cycle" || name == "4cycle")
    return make_pattern({{0, 1}, {1, 2}, {2, 3}, {0, 3}}, "four_cycle");
  throw InvalidArgument("named_pattern: unknown pattern '" + name + "'");
}

double chi_theta(const Eigen::MatrixXd& M, const GraphPattern& t, ChiMethod method) {
  check_matrix(M, t);
  switch (method) {
    case ChiMethod::kAuto:
      return t.closed_form ? closed_chi(M, t) : injective_chi(M, t);
    case ChiMethod::kClosedForm:
      return closed_chi(M, t);
    case ChiMethod::kInjective:
      return injective_chi(M, t);
    case ChiMethod::kBruteForce:
      return brute_chi(M, t);
  }
  return 0.0;
}

Eigen::MatrixXd chi_gradient(const Eigen::MatrixXd& M, const GraphPattern& t, ChiMethod method) {
  check_matrix(M, t);
  if (method == ChiMethod::kClosedForm || (method == ChiMethod::kAuto && t.closed_form))
    return closed_gradient(M, t);
  Eigen::MatrixXd g;
  brute_derivs(M, t, nullptr, g);
  return g;
}

Eigen::MatrixXd chi_hessian_apply(const Eigen::MatrixXd& M, const GraphPattern& t,
                                  const Eigen::MatrixXd& H, ChiMethod method) {
  check_matrix(M, t);
  require(H.rows() == M.rows() && H.cols() == M.cols(), "chi_hessian_apply: shape mismatch");
  if (method == ChiMethod::kClosedForm || (method == ChiMethod::kAuto && t.closed_form))
    return closed_hessian(M, t, H);
  Eigen::MatrixXd out;
  const Eigen::MatrixXd Hz = zero_diag(H);
  brute_derivs(M, t, &Hz, out);
  return out;
}

double pair_norm(const Eigen::MatrixXd& H) {
  double s = 0.0;
  for (Eigen::Index j = 1; j < H.cols(); ++j) s += H.col(j).head(j).squaredNorm();
  return std::sqrt(s);
}

PowerIteration hessian_op_norm(const Eigen::MatrixXd& M, const GraphPattern& t, std::uint64_t seed,
                               int max_steps, double tol) {
  const Eigen::Index n = M.rows();
  CounterRng rng(seed, Stream::kPower, 0);
  Eigen::MatrixXd v(n, n);
  fill_wigner(rng, v);
  v.diagonal().setZero();
  v /= pair_norm(v);
  PowerIteration r;
  double prev = -1.0;
  for (int s = 0; s < max_steps; ++s) {
    Eigen::MatrixXd w = chi_hessian_apply(M, t, v);
    const double lam = pair_norm(w);
    r.steps = s + 1;
    r.value = lam;
    if (lam == 0.0) {
      r.converged = true;
      return r;
    }
    if (prev >= 0.0 && std::fabs(lam - prev) <= tol * lam) {
      r.converged = true;
      return r;
    }
    prev = lam;
    v = w / lam;
  }
  return r;
}

GradHessStats grad_hess_stats(const Eigen::MatrixXd& M, const GraphPattern& t, double eps,
                              std::uint64_t samples, std::uint64_t seed) {
  check_matrix(M, t);
  require(eps >= 0.0 && eps <= 1.0, "grad_hess_stats: eps must lie in [0,1]");
  require(samples >= 1, "grad_hess_stats: need at least one sample");
  struct Part {
    Moments g4, h4;
    int bad = 0;
  };
  if (eps == 0.0) return GradHessStats{{0.0, 0.0, samples, seed}, {0.0, 0.0, samples, seed}, 0};
  auto parts = map_chunks<Part>(
      samples,
      [&](std::uint64_t b, std::uint64_t e) {
        Part p;
        Eigen::MatrixXd G, Me;
        for (std::uint64_t i = b; i < e; ++i) {
          noisy_matrix(M, eps, seed, i, G, Me);
          const double g = std::sqrt(eps) * pair_norm(chi_gradient(Me, t));
          const auto pw = hessian_op_norm(Me, t, mix64(seed ^ i));
          const double h = eps * pw.value;
          p.bad += !pw.converged;
          p.g4.add(g * g * g * g);
          p.h4.add(h * h * h * h);
        }
        return p;
      },
      4);
  auto all = reduce_pairwise(std::move(parts), [](Part a, const Part& b) {
    a.g4 = Moments::merge(a.g4, b.g4);
    a.h4 = Moments::merge(a.h4, b.h4);
    a.bad += b.bad;
    return a;
  });
  auto root4 = [&](const Moments& m) {
    const double k = std::pow(std::max(m.mean, 0.0), 0.25);
    const double se = m.mean > 0.0 ? k / (4.0 * m.mean) * m.stderr_of_mean() : 0.0;
    return Estimate{k, se, m.count, seed};
  };
  return {root4(all.g4), root4(all.h4), all.bad};
}

double sigma2_gradient_term(const Eigen::MatrixXd& M, const GraphPattern& t, double eps) {
  const double g = pair_norm(chi_gradient(M, t));
  return eps * std::pow(1.0 - eps, t.edge_count() - 1) * g * g;
}

double sigma2_floor(const GraphPattern& t, double eps) {
  return 0.5 * eps * std::pow(1.0 - eps, t.edge_count() - 1);
}

bool sigma2_exact_feasible(const GraphPattern& t, int n) {
  if (t.closed_form >= 1 && t.closed_form <= 3) return true;
  return t.edge_count() <= 6 && n <= 60 &&
         t.labeling_count(n) * std::ldexp(1.0, t.edge_count()) <= 4e7;
}

Estimate sigma2(const Eigen::MatrixXd& M, const GraphPattern& t, double eps, Sigma2Mode mode,
                std::uint64_t samples, std::uint64_t seed) {
  check_matrix(M, t);
  require(eps >= 0.0 && eps <= 1.0, "sigma2: eps must lie in [0,1]");
  const int n = int(M.rows()), e = t.edge_count();
  if (mode == Sigma2Mode::kExact) {
    double v = 0.0;
    const double g2 = std::pow(pair_norm(chi_gradient(M, t)), 2);
    switch (t.closed_form) {
      case 1:
        v = eps;
        break;
      case 2:
        v = eps * (1.0 - eps) * g2 + eps * eps;
        break;
      case 3: {
        const double L = t.labeling_count(n);
        const double off = std::pow(pair_norm(M), 2);
        v = eps * std::pow(1.0 - eps, 2) * g2 + eps * eps * (1.0 - eps) * (n - 2) * off / L +
            eps * eps * eps;
        break;
      }
      default:
        if (e > 6 || n > 60)
          throw BudgetExceeded("sigma2: exact mode needs e <= 6 and n <= 60");
        v = exact_generic_sigma2(M, t, eps);
    }
    return {v, 0.0, 0, seed};
  }
  require(samples >= 2, "sigma2: Monte Carlo needs at least 2 samples");
  auto vals = map_chunks<std::vector<double>>(
      samples,
      [&](std::uint64_t b, std::uint64_t en) {
        std::vector<double> out;
        Eigen::MatrixXd G, Me;
        for (std::uint64_t i = b; i < en; ++i) {
          noisy_matrix(M, eps, seed, i, G, Me);
          out.push_back(chi_theta(Me, t));
        }
        return out;
      },
      256);
  std::vector<double> x;
  for (auto& v : vals) x.insert(x.end(), v.begin(), v.end());
  const double N = double(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / N;
  double m2 = 0.0, m4 = 0.0;
  for (double xi : x) {
    const double d = (xi - mean) * (xi - mean);
    m2 += d;
    m4 += d * d;
  }
  const double var = m2 / (N - 1);
  const double c4 = m4 / N;
  return {var, std::sqrt(std::max(0.0, c4 - var * var) / N), x.size(), seed};
}

double chatterjee_bound(double kappa1, double kappa2, double s2) {
  if (!(s2 > 0.0)) throw NumericalError("chatterjee_bound: variance must be positive");
  return 2.0 * std::sqrt(5.0) * kappa1 * kappa2 / s2;
}

ChatterjeeStats chatterjee_stats(const Eigen::MatrixXd& M, const GraphPattern& t, double eps,
                                 std::uint64_t samples, std::uint64_t seed) {
  require(eps > 0.0 && eps <= 1.0, "chatterjee_stats: eps must lie in (0,1]");
  ChatterjeeStats c;
  const auto gh = grad_hess_stats(M, t, eps, samples, seed);
  c.kappa1 = gh.kappa1;
  c.kappa2 = gh.kappa2;
  c.power_nonconverged = gh.power_nonconverged;
  c.sigma2 = sigma2_exact_feasible(t, int(M.rows()))
                 ? sigma2(M, t, eps, Sigma2Mode::kExact)
                 : sigma2(M, t, eps, Sigma2Mode::kMc, std::max<std::uint64_t>(samples, 200), seed);
  c.sigma2_floor = sigma2_floor(t, eps);
  c.sigma2_tilde = std::max(c.sigma2.value, c.sigma2_floor);
  c.tv_bound = std::min(1.0, chatterjee_bound(c.kappa1.value, c.kappa2.value, c.sigma2.value));
  return c;
}

NoisyCountLaws noisy_count_laws(const Sampler& planted, const GraphPattern& t, double eps,
                                std::uint64_t count, std::uint64_t seed, std::uint64_t sigma_mc) {
  require(planted.domain() == Domain::kMatrix, "noisy_count_laws: need a matrix model");
  require(eps > 0.0 && eps <= 1.0, "noisy_count_laws: eps must lie in (0,1]");
  const int n = planted.n();
  require(n >= t.vertices, "noisy_count_laws: n smaller than the pattern");
  const bool exact = sigma2_exact_feasible(t, n);
  const double shrink = std::pow(1.0 - eps, 0.5 * t.edge_count());
  const double floor = sigma2_floor(t, eps);
  struct Part {
    std::vector<double> noisy, sur, sig;
  };
  auto parts = map_chunks<Part>(
      count,
      [&](std::uint64_t b, std::uint64_t e) {
        Part p;
        Eigen::MatrixXd M(n, n), G, Me;
        for (std::uint64_t i = b; i < e; ++i) {
          planted.draw_matrix(seed, i, M);
          noisy_matrix(M, eps, seed, i, G, Me);
          p.noisy.push_back(chi_theta(Me, t));
          const double s2 =
              exact ? sigma2(M, t, eps, Sigma2Mode::kExact).value
                    : sigma2(M, t, eps, Sigma2Mode::kMc, sigma_mc, mix64(seed ^ (i + 1))).value;
          const double st = std::sqrt(std::max(s2, floor));
          CounterRng g(seed, Stream::kAuxiliary, i);
          p.sur.push_back(shrink * chi_theta(M, t) + st * g.normal());
          p.sig.push_back(st);
        }
        return p;
      },
      32);
  NoisyCountLaws out;
  for (auto& p : parts) {
    out.noisy.insert(out.noisy.end(), p.noisy.begin(), p.noisy.end());
    out.surrogate.insert(out.surrogate.end(), p.sur.begin(), p.sur.end());
    out.sigma_tilde.insert(out.sigma_tilde.end(), p.sig.begin(), p.sig.end());
  }
  out.exact_sigma = exact ? count : 0;
  return out;
}

std::vector<double> noisy_count_law(const Sampler& planted, const GraphPattern& t, double eps,
                                    std::uint64_t count, std::uint64_t seed) {
  require(planted.domain() == Domain::kMatrix, "noisy_count_law: need a matrix model");
  require(eps >= 0.0 && eps <= 1.0, "noisy_count_law: eps must lie in [0,1]");
  const int n = planted.n();
  require(n >= t.vertices, "noisy_count_law: n smaller than the pattern");
  auto parts = map_chunks<std::vector<double>>(
      count,
      [&](std::uint64_t b, std::uint64_t e) {
        std::vector<double> out;
        Eigen::MatrixXd M(n, n), G, Me;
        for (std::uint64_t i = b; i < e; ++i) {
          planted.draw_matrix(seed, i, M);
          noisy_matrix(M, eps, seed, i, G, Me);
          out.push_back(chi_theta(Me, t));
        }
        return out;
      },
      32);
  std::vector<double> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<double> count_law(const Sampler& law, const GraphPattern& t, std::uint64_t count,
                              std::uint64_t seed) {
  require(law.domain() == Domain::kMatrix, "count_law: need a matrix model");
  const int n = law.n();
  require(n >= t.vertices, "count_law: n smaller than the pattern");
  auto parts = map_chunks<std::vector<double>>(
      count,
      [&](std::uint64_t b, std::uint64_t e) {
        std::vector<double> out;
        Eigen::MatrixXd M(n, n);
        for (std::uint64_t i = b; i < e; ++i) {
          law.draw_matrix(seed, i, M);
          out.push_back(chi_theta(M, t));
        }
        return out;
      },
      256);
  std::vector<double> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

MomentCheck moment_check(const GraphPattern& t, const std::vector<int>& qs, int n,
                         std::uint64_t samples, std::uint64_t seed, double tolerance) {
  require(!qs.empty(), "moment_check: no moments requested");
  for (int q : qs) require(q >= 2 && q % 2 == 0 && q <= 16, "moment_check: q must be even in [2,16]");
  require(n >= t.vertices, "moment_check: n smaller than the pattern");
  MomentCheck mc;
  mc.q = qs;
  mc.tolerance = tolerance;
  if (t.edge_count() == 1) {
    // a single edge count is exactly N(0,1)
    for (int q : qs) {
      double df = 1.0;
      for (int j = q - 1; j > 1; j -= 2) df *= j;
      const double r = std::pow(df, 1.0 / q) / std::sqrt(double(q));
      mc.ratio.push_back({r, 0.0, 0, seed});
      mc.flagged.push_back(r > 1.0 + tolerance);
    }
    return mc;
  }
  require(samples >= 2, "moment_check: need at least 2 samples");
  const Sampler null(NullSpec{GaussWigner{n}});
  const std::size_t K = qs.size();
  auto parts = map_chunks<std::vector<Moments>>(
      samples,
      [&](std::uint64_t b, std::uint64_t e) {
        std::vector<Moments> m(K);
        Eigen::MatrixXd M(n, n);
        for (std::uint64_t i = b; i < e; ++i) {
          null.draw_matrix(seed, i, M);
          const double x = chi_theta(M, t);
          for (std::size_t k = 0; k < K; ++k) m[k].add(std::pow(x, qs[k]));
        }
        return m;
      },
      kChunkSize);
  auto all = reduce_pairwise(std::move(parts), [&](std::vector<Moments> a, const std::vector<Moments>& b) {
    for (std::size_t k = 0; k < K; ++k) a[k] = Moments::merge(a[k], b[k]);
    return a;
  });
  for (std::size_t k = 0; k < K; ++k) {
    const double q = qs[k], m = all[k].mean;
    const double r = std::pow(m, 1.0 / q) / std::sqrt(q);
    const double se = r / (q * m) * all[k].stderr_of_mean();
    mc.ratio.push_back({r, se, all[k].count, seed});
    mc.flagged.push_back(r > 1.0 + tolerance);
  }
  return mc;
}

void write_subgraph_csv(std::ostream& os, const std::vector<SubgraphRow>& rows, bool header) {
  if (header) os << "pattern_hash,n,eps,statistic,value,stderr\n";
  const auto old = os.precision(17);
  for (const auto& r : rows)
    os << r.pattern_hash << ',' << r.n << ',' << r.eps << ',' << r.statistic << ',' << r.value << ','
       << r.std_err << '\n';
  os.precision(old);
}

}  // namespace ldtv
