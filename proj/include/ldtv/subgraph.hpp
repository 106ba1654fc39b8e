#pragma once

// Normalized signed subgraph counts
//   chi_theta(M) = |L_theta|^{-1/2} sum over distinct copies of theta in K_n
//                  of the product of M over the copy's edges,
// their derivatives under Gaussian resampling M -> sqrt(1-eps) M + sqrt(eps) G,
// the Chatterjee second-order Poincare TV bound, and the noisy-count laws.
// The diagonal of M never enters.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ldtv/core/estimate.hpp"
#include "ldtv/models.hpp"

namespace ldtv {

struct GraphPattern {
  int vertices = 0;
  std::vector<std::pair<int, int>> edges;  // u < v, sorted
  std::uint64_t aut = 1;
  std::string name;
  std::string hash;  // 16 hex digits of the canonical form
  int closed_form = 0;  // 1 edge, 2 two-path, 3 triangle, 4 four-cycle, 0 none

  int edge_count() const { return int(edges.size()); }
  /// |L_theta| = n! / ((n - v)! |Aut|).
  double labeling_count(int n) const;
};

/// Connected simple graph on <= 8 vertices (vertex ids 0..v-1 all used).
GraphPattern make_pattern(std::vector<std::pair<int, int>> edges, std::string name = "");
/// "u v" per line, 0-indexed; blank lines and lines starting with '#' skipped.
GraphPattern read_pattern(std::istream& is, std::string name = "");
/// "edge", "two_path" (alias "2path"), "triangle", "four_cycle" (alias "4cycle").
GraphPattern named_pattern(const std::string& name);

enum class ChiMethod { kAuto, kClosedForm, kInjective, kBruteForce };

/// Closed forms exist for the four named patterns; kAuto uses them and
/// otherwise the injective-sum engine.
double chi_theta(const Eigen::MatrixXd& M, const GraphPattern& theta,
                 ChiMethod method = ChiMethod::kAuto);

/// Symmetric, zero-diagonal matrix of d chi / d x_ab over the pair
/// variables x_ab = M_ab = M_ba.
Eigen::MatrixXd chi_gradient(const Eigen::MatrixXd& M, const GraphPattern& theta,
                             ChiMethod method = ChiMethod::kAuto);
/// Hessian (over pair variables) applied to a symmetric zero-diagonal H.
Eigen::MatrixXd chi_hessian_apply(const Eigen::MatrixXd& M, const GraphPattern& theta,
                                  const Eigen::MatrixXd& H, ChiMethod method = ChiMethod::kAuto);
/// Euclidean norm over pairs a < b.
double pair_norm(const Eigen::MatrixXd& H);

struct PowerIteration {
  double value = 0.0;
  int steps = 0;
  bool converged = false;
};

/// Largest |eigenvalue| of the Hessian at M (matrix-free).
PowerIteration hessian_op_norm(const Eigen::MatrixXd& M, const GraphPattern& theta,
                               std::uint64_t seed, int max_steps = 50, double tol = 1e-6);

struct GradHessStats {
  Estimate kappa1;  // (E |grad_G F|^4)^{1/4}
  Estimate kappa2;  // (E |Hess_G F|_op^4)^{1/4}
  int power_nonconverged = 0;
};

/// F(G) = chi_theta(sqrt(1-eps) M + sqrt(eps) G), G a null Wigner draw.
GradHessStats grad_hess_stats(const Eigen::MatrixXd& M, const GraphPattern& theta, double eps,
                              std::uint64_t samples, std::uint64_t seed);

enum class Sigma2Mode { kExact, kMc };

/// Var_G F(G). Exact mode: closed forms for edge, 2-path and triangle at any
/// n, otherwise copy enumeration (needs e <= 6, n <= 60; BudgetExceeded
/// beyond). The value is sum_{S nonempty} eps^|S| (1-eps)^{e-|S|} (d_S chi(M))^2.
Estimate sigma2(const Eigen::MatrixXd& M, const GraphPattern& theta, double eps, Sigma2Mode mode,
                std::uint64_t samples = 2000, std::uint64_t seed = 0);
/// The |S| = 1 term alone: eps (1-eps)^{e-1} |grad chi(M)|^2.
double sigma2_gradient_term(const Eigen::MatrixXd& M, const GraphPattern& theta, double eps);
/// (eps/2) (1-eps)^{e-1}.
double sigma2_floor(const GraphPattern& theta, double eps);
bool sigma2_exact_feasible(const GraphPattern& theta, int n);

struct ChatterjeeStats {
  Estimate kappa1, kappa2, sigma2;
  double sigma2_floor = 0.0;
  double sigma2_tilde = 0.0;  // max(sigma2, floor)
  double tv_bound = 0.0;      // min(1, 2 sqrt5 kappa1 kappa2 / sigma2)
  int power_nonconverged = 0;
};

/// 2 sqrt(5) kappa1 kappa2 / sigma2, unclamped. Throws if sigma2 <= 0.
double chatterjee_bound(double kappa1, double kappa2, double sigma2);
ChatterjeeStats chatterjee_stats(const Eigen::MatrixXd& M, const GraphPattern& theta, double eps,
                                 std::uint64_t samples, std::uint64_t seed);

struct NoisyCountLaws {
  std::vector<double> noisy;      // chi(sqrt(1-eps) M + sqrt(eps) G)
  std::vector<double> surrogate;  // sqrt(1-eps)^e chi(M) + sigma_tilde(M) g
  std::vector<double> sigma_tilde;
  std::uint64_t exact_sigma = 0;  // how many sigma values were exact
};

NoisyCountLaws noisy_count_laws(const Sampler& planted, const GraphPattern& theta, double eps,
                                std::uint64_t count, std::uint64_t seed,
                                std::uint64_t sigma_mc = 200);
/// The `noisy` component of noisy_count_laws alone (same draws).
std::vector<double> noisy_count_law(const Sampler& planted, const GraphPattern& theta, double eps,
                                    std::uint64_t count, std::uint64_t seed);
/// chi_theta(M) for M drawn from `law` (no noise).
std::vector<double> count_law(const Sampler& law, const GraphPattern& theta, std::uint64_t count,
                              std::uint64_t seed);

struct MomentCheck {
  std::vector<int> q;
  std::vector<Estimate> ratio;  // (E chi^q)^{1/q} / sqrt(q)
  std::vector<bool> flagged;    // ratio > 1 + tolerance
  double tolerance = 0.0;
};

/// Null moments of chi_theta at size n. A single edge is exactly N(0,1) and
/// is answered without sampling.
MomentCheck moment_check(const GraphPattern& theta, const std::vector<int>& q, int n,
                         std::uint64_t samples, std::uint64_t seed, double tolerance = 0.1);

struct SubgraphRow {
  std::string pattern_hash;
  int n = 0;
  double eps = 0.0;
  std::string statistic;
  double value = 0.0;
  double std_err = 0.0;
};

/// Header pattern_hash,n,eps,statistic,value,stderr.
void write_subgraph_csv(std::ostream& os, const std::vector<SubgraphRow>& rows, bool header = true);

}  // namespace ldtv
