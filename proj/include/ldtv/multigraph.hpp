#pragma once

// Small multigraph shapes and sums of edge-weight products over injective
// vertex placements into an n x n symmetric matrix. Used both for the
// Wigner low-degree family (edge multiplicity = Hermite degree of the entry)
// and for signed subgraph counts (all multiplicities 1).

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ldtv {

struct Multigraph {
  int vertices = 0;
  /// (u, v, multiplicity) with u < v, at most one entry per pair.
  std::vector<std::array<int, 3>> edges;

  int total_multiplicity() const;
  bool connected() const;
  /// e.g. "v3:0-1x2,1-2x1".
  std::string descriptor() const;
  bool operator==(const Multigraph&) const = default;
};

/// Relabels to the lexicographically smallest edge list.
Multigraph canonical_form(const Multigraph& g);
/// Vertex permutations preserving the multiset of edges (brute force).
std::uint64_t automorphism_count(const Multigraph& g);
/// All connected loopless multigraphs with 1 <= total multiplicity <= max_degree,
/// one per isomorphism class, ordered by (multiplicity, vertices, descriptor).
std::vector<Multigraph> multigraph_family(int max_degree);
/// n (n-1) ... (n-v+1), as a double.
double falling_factorial(int n, int k);

/// Sums over ordered injective maphi of prod_e w_{m_e}(M_{phi(u) phi(v)}),
/// evaluated by Moebius inversion over vertex partitions into independent
/// sets and variable elimination on each quotient. `entry_power[k]` are the
/// n x n matrices w_k(M) with zero diagonal, k = 1..max multiplicity.
class InjectiveSums {
 public:
  /// Throws BudgetExceeded when the planned per-evaluation cost of some
  /// shape at size n exceeds `flop_budget`.
  InjectiveSums(std::vector<Multigraph> shapes, int n, double flop_budget = 5e10);

  const std::vector<Multigraph>& shapes() const { return shapes_; }
  int max_multiplicity() const { return max_mult_; }
  double planned_flops() const { return planned_flops_; }

  /// entry_power[0] is ignored; entry_power[k] for 1 <= k <= max_multiplicity().
  std::vector<double> evaluate(const std::vector<Eigen::MatrixXd>& entry_power) const;

 private:
  struct Quotient {
    int vertices = 0;
    // (a, b, label id) with a < b
    std::vector<std::array<int, 3>> edges;
  };
  struct Term {
    int quotient = 0;
    double coefficient = 0.0;
  };

  std::vector<Multigraph> shapes_;
  int n_;
  int max_mult_ = 0;
  double planned_flops_ = 0.0;
  std::vector<std::vector<int>> labels_;  // label id -> sorted multiplicities
  std::vector<Quotient> quotients_;
  std::vector<std::vector<Term>> terms_;  // per shape
};

/// Zero-diagonal matrices h_k(M) (normalized Hermite applied entrywise),
/// k = 0..max_k.
std::vector<Eigen::MatrixXd> hermite_entry_powers(const Eigen::MatrixXd& M, int max_k);

}  // namespace ldtv
