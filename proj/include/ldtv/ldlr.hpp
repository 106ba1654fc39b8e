#pragma once

// Degree-D advantage chi^2_D(P || N) in the symmetric Boolean, symmetric
// Gaussian-vector and Wigner-matrix settings.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ldtv/models.hpp"
#include "ldtv/multigraph.hpp"
#include "ldtv/orthopoly.hpp"

namespace ldtv {

enum class Method { kExact, kMc };

struct CoeffEntry {
  std::string index;  // basis element descriptor
  int degree = 0;
  double estimate = 0.0;
  double std_err = 0.0;
};

struct BasisCoeffs {
  int D = 0;
  std::vector<CoeffEntry> entries;  // nonzero-index basis elements only
};

struct AdvantageEstimate {
  double chi2 = 0.0;       // max(0, raw)
  double chi2_raw = 0.0;   // unbiased split-sample value, may be < 0
  double std_err = 0.0;
  int D = 0;
  Method method = Method::kExact;
  /// Family-restricted or non-symmetric input: the value only bounds the
  /// unrestricted chi^2_D from below.
  bool lower_bound_only = false;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  /// Cumulative value over basis elements of degree <= d, d = 1..D.
  std::vector<double> by_degree;
  BasisCoeffs coeffs;
};

/// a_l = E_pi[Kr_l(y)], l = 0..D, in extended precision.
std::vector<long double> krawtchouk_coefficients(const WeightLaw& pi, const KrawtchoukBasis& basis,
                                                 int D);

/// Exact sum_{l=1..D} a_l^2 for a symmetric Boolean planted law.
AdvantageEstimate chi2_sym_boolean(const WeightLaw& pi, const KrawtchoukBasis& basis, int D);

/// sum_w (pi(w) - nu(w))^2 / nu(w).
double chi2_full(const WeightLaw& pi, const WeightLaw& nu);

// ---------------------------------------------------------------------------
// Symmetric Gaussian basis

/// All integer partitions with parts >= 1 and total size 1..D, parts sorted
/// in decreasing order, ordered by (size, reverse lexicographic).
std::vector<std::vector<int>> partitions_up_to(int D);

/// Orthonormal S_n-symmetric Hermite basis
///   psi_lambda(x) = N_lambda^{-1/2} sum_{alpha in orbit(lambda)} prod_j h_{alpha_j}(x_j),
/// evaluated by the generating function prod_j (1 + sum_k t_k h_k(x_j))
/// truncated at weighted degree D. Partitions with more parts than n are
/// left out.
class SymmetricHermite {
 public:
  SymmetricHermite(int n, int D);

  int n() const { return n_; }
  int D() const { return D_; }
  const std::vector<std::vector<int>>& partitions() const { return parts_; }
  /// log N_lambda.
  const std::vector<double>& log_orbit_sizes() const { return log_orbit_; }
  /// psi_lambda(x) for every partition, same order as partitions().
  void evaluate(std::span<const double> x, std::span<double> out) const;

 private:
  int n_, D_;
  std::vector<std::vector<int>> parts_;
  std::vector<double> log_orbit_;
  std::vector<double> inv_sqrt_orbit_;
  // generating-function state: index 0 is the empty partition
  std::vector<int> size_;
  std::vector<std::vector<std::pair<int, int>>> children_;  // (part k, index without one k)
  std::vector<int> state_of_part_;                          // state index of parts_[i]
};

using VectorDraw = std::function<void(std::uint64_t index, std::span<double>)>;
using MatrixDraw = std::function<void(std::uint64_t index, Eigen::MatrixXd&)>;

/// Split-sample MC estimate of sum_lambda E_P[psi_lambda]^2 over all
/// partitions of size <= D (D <= 12).
AdvantageEstimate chi2_sym_gaussian(const Sampler& planted, int D, std::uint64_t samples,
                                    std::uint64_t seed);
AdvantageEstimate chi2_sym_gaussian(int n, const VectorDraw& draw, bool symmetric, int D,
                                    std::uint64_t samples, std::uint64_t seed);

/// psi_alpha(M) = inj_alpha(M) / sqrt(|Aut| n^{(v)}) for each shape.
std::vector<double> wigner_basis_values(const InjectiveSums& engine, const Eigen::MatrixXd& M);

/// Split-sample MC estimate of sum_alpha E_P[psi_alpha]^2 over a family of
/// connected multigraph shapes. Throws BudgetExceeded if the family is too
/// expensive at this n.
AdvantageEstimate chi2_wigner_mc(const Sampler& planted, const std::vector<Multigraph>& family,
                                 std::uint64_t samples, std::uint64_t seed,
                                 double flop_budget = 5e10);
AdvantageEstimate chi2_wigner_mc(int n, const MatrixDraw& draw,
                                 const std::vector<Multigraph>& family, std::uint64_t samples,
                                 std::uint64_t seed, double flop_budget = 5e10);

/// CSV rows: index,degree,estimate,stderr.
void write_coeffs_csv(std::ostream& os, const BasisCoeffs& coeffs);

}  // namespace ldtv
