#include "ldtv/multigraph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "ldtv/core/error.hpp"

namespace ldtv {
namespace {

using EdgeList = std::vector<std::array<int, 3>>;

EdgeList relabel(const EdgeList& edges, const std::vector<int>& perm) {
  EdgeList out;
  out.reserve(edges.size());
  for (auto [u, v, m] : edges) {
    int a = perm[u], b = perm[v];
    if (a > b) std::swap(a, b);
    out.push_back({a, b, m});
  }
  std::sort(out.begin(), out.end());
  return out;
}

EdgeList canonical_edges(int vertices, const EdgeList& edges) {
  std::vector<int> perm(vertices);
  std::iota(perm.begin(), perm.end(), 0);
  EdgeList best = relabel(edges, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    EdgeList cand = relabel(edges, perm);
    if (cand < best) best = std::move(cand);
  }
  return best;
}

// Restricted growth strings: block[v] = index of the block holding v.
void for_each_partition(int v, const std::function<void(const std::vector<int>&, int)>& fn) {
  std::vector<int> block(v, 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == v) {
      fn(block, used);
      return;
    }
    for (int b = 0; b <= used && b < v; ++b) {
      block[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  if (v == 0) {
    fn(block, 0);
    return;
  }
  block[0] = 0;
  rec(1, 1);
}

struct Pair {
  int a, b;
  Eigen::MatrixXd m;  // rows index a, columns index b
};

double eliminate(int n, std::vector<std::optional<Eigen::VectorXd>> unary, std::vector<Pair> pairs,
                 std::vector<bool> alive) {
  double scalar = 1.0;
  for (;;) {
    // merge parallel pair factors
    for (std::size_t i = 0; i < pairs.size(); ++i)
      for (std::size_t j = i + 1; j < pairs.size();) {
        if (pairs[j].a == pairs[i].a && pairs[j].b == pairs[i].b) {
          pairs[i].m = pairs[i].m.cwiseProduct(pairs[j].m);
        } else if (pairs[j].a == pairs[i].b && pairs[j].b == pairs[i].a) {
          pairs[i].m = pairs[i].m.cwiseProduct(pairs[j].m.transpose());
        } else {
          ++j;
          continue;
        }
        pairs.erase(pairs.begin() + long(j));
      }
    int best = -1, best_deg = 1 << 30;
    for (int u = 0; u < int(alive.size()); ++u) {
      if (!alive[u]) continue;
      int deg = 0;
      for (auto& p : pairs) deg += (p.a == u || p.b == u);
      if (deg < best_deg) {
        best = u;
        best_deg = deg;
      }
    }
    if (best < 0) return scalar;
    const int u = best;
    Eigen::VectorXd f = unary[u] ? *unary[u] : Eigen::VectorXd::Ones(n);
    std::vector<std::size_t> touching;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (pairs[i].a == u || pairs[i].b == u) touching.push_back(i);
    // oriented view: rows index u
    auto rows_u = [&](std::size_t i) -> Eigen::MatrixXd {
      return pairs[i].a == u ? pairs[i].m : Eigen::MatrixXd(pairs[i].m.transpose());
    };
    auto other = [&](std::size_t i) { return pairs[i].a == u ? pairs[i].b : pairs[i].a; };
    auto drop = [&](std::vector<std::size_t> idx) {
      std::sort(idx.rbegin(), idx.rend());
      for (auto i : idx) pairs.erase(pairs.begin() + long(i));
    };
    if (best_deg == 0) {
      scalar *= f.sum();
      alive[u] = false;
    } else if (best_deg == 1) {
      const std::size_t i = touching[0];
      const int v = other(i);
      Eigen::VectorXd g = pairs[i].a == u ? Eigen::VectorXd(pairs[i].m.transpose() * f)
                                          : Eigen::VectorXd(pairs[i].m * f);
      unary[v] = unary[v] ? Eigen::VectorXd(unary[v]->cwiseProduct(g)) : g;
      drop(touching);
      alive[u] = false;
    } else if (best_deg == 2) {
      const int v = other(touching[0]), w = other(touching[1]);
      Eigen::MatrixXd x = rows_u(touching[0]);
      Eigen::MatrixXd y = rows_u(touching[1]);
      Eigen::MatrixXd vw = x.transpose() * (f.asDiagonal() * y);
      drop(touching);
      pairs.push_back({v, w, std::move(vw)});
      alive[u] = false;
    } else {
      // condition on the value of u
      alive[u] = false;
      double total = 0.0;
      for (int val = 0; val < n; ++val) {
        if (f[val] == 0.0) continue;
        auto un = unary;
        std::vector<Pair> rest;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          if (pairs[i].a != u && pairs[i].b != u) {
            rest.push_back(pairs[i]);
            continue;
          }
          const int v = other(i);
          Eigen::VectorXd g = pairs[i].a == u ? Eigen::VectorXd(pairs[i].m.row(val).transpose())
                                              : Eigen::VectorXd(pairs[i].m.col(val));
          un[v] = un[v] ? Eigen::VectorXd(un[v]->cwiseProduct(g)) : g;
        }
        total += f[val] * eliminate(n, std::move(un), std::move(rest), alive);
      }
      return scalar * total;
    }
  }
}

// Same elimination order on the structure only; returns a flop estimate.
double plan_cost(double n, std::vector<std::set<int>> adj, std::vector<bool> alive) {
  double cost = 0.0;
  for (;;) {
    int best = -1, best_deg = 1 << 30;
    for (int u = 0; u < int(alive.size()); ++u)
      if (alive[u] && int(adj[u].size()) < best_deg) {
        best = u;
        best_deg = int(adj[u].size());
      }
    if (best < 0) return cost;
    const int u = best;
    alive[u] = false;
    std::vector<int> nb(adj[u].begin(), adj[u].end());
    for (int v : nb) adj[v].erase(u);
    adj[u].clear();
    if (best_deg == 0) {
      cost += n;
    } else if (best_deg == 1) {
      cost += 2 * n * n;
    } else if (best_deg == 2) {
      cost += 2 * n * n * n + n * n;
      adj[nb[0]].insert(nb[1]);
      adj[nb[1]].insert(nb[0]);
    } else {
      return cost + n * (n * nb.size() + plan_cost(n, adj, alive));
    }
  }
}

}  // namespace

int Multigraph::total_multiplicity() const {
  int s = 0;
  for (auto& e : edges) s += e[2];
  return s;
}

bool Multigraph::connected() const {
  if (vertices <= 1) return true;
  std::vector<int> parent(vertices);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto& e : edges) parent[find(e[0])] = find(e[1]);
  for (int v = 1; v < vertices; ++v)
    if (find(v) != find(0)) return false;
  return true;
}

std::string Multigraph::descriptor() const {
  std::ostringstream os;
  os << "v" << vertices << ":";
  for (std::size_t i = 0; i < edges.size(); ++i)
    os << (i ? "," : "") << edges[i][0] << "-" << edges[i][1] << "x" << edges[i][2];
  return os.str();
}

Multigraph canonical_form(const Multigraph& g) {
  return Multigraph{g.vertices, canonical_edges(g.vertices, g.edges)};
}

std::uint64_t automorphism_count(const Multigraph& g) {
  std::vector<int> perm(g.vertices);
  std::iota(perm.begin(), perm.end(), 0);
  EdgeList base = relabel(g.edges, perm);
  std::uint64_t count = 0;
  do {
    if (relabel(g.edges, perm) == base) ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return count;
}

std::vector<Multigraph> multigraph_family(int max_degree) {
  require(max_degree >= 1 && max_degree <= 8, "multigraph_family: degree must lie in [1,8]");
  std::vector<Multigraph> all;
  std::vector<Multigraph> level{Multigraph{2, {{0, 1, 1}}}};
  for (int d = 1; d <= max_degree; ++d) {
    std::sort(level.begin(), level.end(), [](const Multigraph& a, const Multigraph& b) {
      return std::make_pair(a.vertices, a.descriptor()) < std::make_pair(b.vertices, b.descriptor());
    });
    all.insert(all.end(), level.begin(), level.end());
    if (d == max_degree) break;
    std::set<std::string> seen;
    std::vector<Multigraph> next;
    auto add = [&](Multigraph g) {
      g = canonical_form(g);
      if (seen.insert(g.descriptor()).second) next.push_back(std::move(g));
    };
    for (const auto& g : level) {
      for (std::size_t i = 0; i < g.edges.size(); ++i) {
        Multigraph h = g;
        h.edges[i][2] += 1;
        add(h);
      }
      for (int a = 0; a < g.vertices; ++a)
        for (int b = a + 1; b < g.vertices; ++b) {
          bool present = false;
          for (auto& e : g.edges) present |= (e[0] == a && e[1] == b);
          if (present) continue;
          Multigraph h = g;
          h.edges.push_back({a, b, 1});
          add(h);
        }
      for (int a = 0; a < g.vertices; ++a) {
        Multigraph h = g;
        h.edges.push_back({a, g.vertices, 1});
        h.vertices += 1;
        add(h);
      }
    }
    level = std::move(next);
  }
  return all;
}

double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= double(n - i);
  return r;
}

// ---------------------------------------------------------------------------

InjectiveSums::InjectiveSums(std::vector<Multigraph> shapes, int n, double flop_budget)
    : shapes_(std::move(shapes)), n_(n) {
  require(n >= 1, "InjectiveSums: n must be >= 1");
  std::map<std::vector<int>, int> label_ids;
  std::map<std::string, int> quotient_ids;
  for (const auto& g : shapes_) {
    require(g.vertices <= 8, "InjectiveSums: at most 8 vertices");
    require(g.connected(), "InjectiveSums: shapes must be connected");
    for (auto& e : g.edges) {
      require(e[0] != e[1], "InjectiveSums: loops are not allowed");
      require(e[2] >= 1, "InjectiveSums: multiplicities must be >= 1");
      max_mult_ = std::max(max_mult_, e[2]);
    }
    require(g.vertices <= n, "InjectiveSums: shape has more vertices than n");
    std::vector<std::vector<bool>> adjacent(g.vertices, std::vector<bool>(g.vertices, false));
    for (auto& e : g.edges) adjacent[e[0]][e[1]] = adjacent[e[1]][e[0]] = true;

    std::map<int, double> merged;  // quotient id -> coefficient
    for_each_partition(g.vertices, [&](const std::vector<int>& block, int blocks) {
      for (auto& e : g.edges)
        if (block[e[0]] == block[e[1]]) return;  // merged endpoints hit the zero diagonal
      std::vector<int> sizes(blocks, 0);
      for (int b : block) sizes[b]++;
      double mu = 1.0;
      for (int s : sizes) {
        for (int i = 2; i < s; ++i) mu *= i;
        if (s % 2 == 0) mu = -mu;
      }
      std::map<std::pair<int, int>, std::vector<int>> lab;
      for (auto& e : g.edges) {
        int a = block[e[0]], b = block[e[1]];
        if (a > b) std::swap(a, b);
        lab[{a, b}].push_back(e[2]);
      }
      EdgeList qe;
      for (auto& [ab, ms] : lab) {
        std::sort(ms.begin(), ms.end());
        auto [it, fresh] = label_ids.emplace(ms, int(labels_.size()));
        if (fresh) labels_.push_back(ms);
        qe.push_back({ab.first, ab.second, it->second});
      }
      qe = canonical_edges(blocks, qe);
      std::ostringstream key;
      key << blocks;
      for (auto& e : qe) key << ":" << e[0] << "," << e[1] << "," << e[2];
      auto [qit, qfresh] = quotient_ids.emplace(key.str(), int(quotients_.size()));
      if (qfresh) quotients_.push_back(Quotient{blocks, qe});
      merged[qit->second] += mu;
    });
    std::vector<Term> terms;
    double flops = 0.0;
    for (auto [q, c] : merged) {
      if (c == 0.0) continue;
      terms.push_back({q, c});
      std::vector<std::set<int>> adj(quotients_[q].vertices);
      for (auto& e : quotients_[q].edges) {
        adj[e[0]].insert(e[1]);
        adj[e[1]].insert(e[0]);
      }
      flops += plan_cost(n, adj, std::vector<bool>(quotients_[q].vertices, true));
    }
    if (flops > flop_budget)
      throw BudgetExceeded("shape " + g.descriptor() + " needs ~" + std::to_string(flops) +
                           " flops per evaluation at n=" + std::to_string(n));
    planned_flops_ += flops;
    terms_.push_back(std::move(terms));
  }
}

std::vector<double> InjectiveSums::evaluate(const std::vector<Eigen::MatrixXd>& entry_power) const {
  require(int(entry_power.size()) > max_mult_, "InjectiveSums: missing entry powers");
  for (int k = 1; k <= max_mult_; ++k)
    require(entry_power[k].rows() == n_ && entry_power[k].cols() == n_,
            "InjectiveSums: entry power has the wrong size");
  std::vector<std::optional<Eigen::MatrixXd>> label_mat(labels_.size());
  auto weight = [&](int id) -> const Eigen::MatrixXd& {
    if (!label_mat[id]) {
      const auto& ms = labels_[id];
      Eigen::MatrixXd w = entry_power[ms[0]];
      for (std::size_t i = 1; i < ms.size(); ++i) w = w.cwiseProduct(entry_power[ms[i]]);
      label_mat[id] = std::move(w);
    }
    return *label_mat[id];
  };
  std::vector<std::optional<double>> hom(quotients_.size());
  std::vector<double> out;
  out.reserve(shapes_.size());
  for (const auto& terms : terms_) {
    double total = 0.0;
    for (const auto& t : terms) {
      if (!hom[t.quotient]) {
        const auto& q = quotients_[t.quotient];
        std::vector<Pair> pairs;
        for (auto& e : q.edges) pairs.push_back({e[0], e[1], weight(e[2])});
        hom[t.quotient] = eliminate(n_, std::vector<std::optional<Eigen::VectorXd>>(q.vertices),
                                    std::move(pairs), std::vector<bool>(q.vertices, true));
      }
      total += t.coefficient * *hom[t.quotient];
    }
    out.push_back(total);
  }
  return out;
}

std::vector<Eigen::MatrixXd> hermite_entry_powers(const Eigen::MatrixXd& M, int max_k) {
  require(M.rows() == M.cols(), "hermite_entry_powers: matrix must be square");
  std::vector<Eigen::MatrixXd> out(max_k + 1);
  const Eigen::Index n = M.rows();
  out[0] = Eigen::MatrixXd::Ones(n, n);
  out[0].diagonal().setZero();
  if (max_k >= 1) {
    out[1] = M;
    out[1].diagonal().setZero();
  }
  for (int k = 1; k < max_k; ++k)
    out[k + 1] = (out[1].cwiseProduct(out[k]) - std::sqrt(double(k)) * out[k - 1]) / std::sqrt(double(k + 1));
  return out;
}

}  // namespace ldtv
