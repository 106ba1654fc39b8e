#pragma once

// Low-degree symmetric statistics of Gaussian-space vectors:
//   (F_k)_i = n^{-1/2} sum_j h_i(x_j),  i = 1..k,
// the regularity test on empirical Hermite Gram matrices, and Monte Carlo
// diagnostics (moments, characteristic functions, histogram TV) comparing
// F_k under the null and under noised planted laws.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ldtv/models.hpp"

namespace ldtv {

struct SymStatVector {
  int k = 0;
  std::vector<double> values;
};

SymStatVector eval_Fk(std::span<const double> x, int k);
/// out.size() = k.
void eval_Fk(std::span<const double> x, std::span<double> out);

struct RegularityReport {
  int ell = 0;
  Eigen::MatrixXd gram;  // G_ab = (1/n) sum_j h_a(y_j) h_b(y_j), a, b = 0..ell
  double min_eig = 0.0;
  double max_eig = 0.0;
  bool is_regular = false;  // spectrum inside [1/2, 3/2]
};

RegularityReport regularity_check(std::span<const double> y, int ell);

/// Row-major samples in R^k.
struct PointCloud {
  int k = 0;
  std::uint64_t count = 0;
  std::vector<double> values;
  std::span<const double> row(std::uint64_t i) const { return {values.data() + i * k, std::size_t(k)}; }
};

struct FkSampling {
  int k = 1;
  double eps = 0.0;  // OU noise applied to each draw before F_k
  /// > 0: keep only draws that are ell-regular (rejection per sample).
  int condition_ell = 0;
  int max_attempts = 1000;
};

/// F_k(OU_eps x) for x drawn from `law` (index i uses sample index i, or
/// i * max_attempts + attempt when conditioning). Throws NumericalError if a
/// sample exhausts its attempts.
PointCloud sample_Fk(const Sampler& law, const FkSampling& opts, std::uint64_t count,
                     std::uint64_t seed);

struct MomentProbe {
  std::vector<int> t;          // 2, 4, .., T
  std::vector<double> ratio;   // (E <z,xi>^t)^{1/t} / sqrt(t)
  double max_ratio = 0.0;
  double cap = 0.0;
  bool flagged = false;  // max_ratio > cap
};

/// Sub-Gaussian moment profile along a unit direction xi. Refuses (throws
/// InvalidArgument) when count < 100 * 3^T.
MomentProbe moment_probe(const PointCloud& z, std::span<const double> xi, int T,
                         double cap = 1.2);

struct CfValue {
  std::complex<double> value;
  double std_err = 0.0;  // max of the real and imaginary stderrs
};

struct CfGrid {
  int k = 0;
  std::vector<std::vector<double>> xi;
  std::vector<double> radius;    // |xi|
  std::vector<int> direction;    // ray index, -1 if not on a radial grid
  std::vector<CfValue> values;
};

/// xi_{d,j} = (R j / radii) u_d, j = 1..radii, with u_0 = e_1 and the other
/// directions uniform on the sphere.
CfGrid radial_grid(int k, double R, int directions = 32, int radii = 64, std::uint64_t seed = 0);

/// Fills grid.values with (1/m) sum_s exp(i <xi, z_s>).
void empirical_cf(const PointCloud& z, CfGrid& grid);

struct FrequencyMatch {
  double sup_diff = 0.0;
  std::size_t argmax = 0;
  double stderr_at_max = 0.0;
  double noise_floor = 0.0;  // 3 x max combined stderr over the ball
};

/// sup over grid points with |xi| <= R of |cf_planted - cf_null|.
FrequencyMatch frequency_match_diag(const CfGrid& null_cf, const CfGrid& planted_cf, double R);

struct DecayPoint {
  double radius = 0.0;
  double max_abs = 0.0;  // max over rays of |cf|
  double std_err = 0.0;
};

struct FourierDecay {
  std::vector<DecayPoint> curve;
  double a = 0.0, b = 0.0;  // |cf| ~ a exp(-b eps R^2), fit on points above 3 stderr
  int points_fitted = 0;
  /// min over the second half of radii of max |cf|: stays away from 0 when
  /// the law does not decay.
  double tail_floor = 0.0;
};

FourierDecay fourier_decay_diag(const CfGrid& cf, double eps);

struct TvHistogram {
  double tv = 0.0;
  double bias_floor = 0.0;  // sum_c sqrt(p_c / (pi m)): expected TV of two samples of one law
  double std_err = 0.0;
  int cells = 0;
  std::uint64_t m = 0;
};

/// Plug-in TV between binned samples, equal-width bins over the pooled
/// 0.1%-99.9% quantile box; points outside the box share one overflow cell.
TvHistogram tv_histogram(const PointCloud& a, const PointCloud& b, int bins);

/// Columns xi0..xi{k-1},re,im,stderr.
void write_cf_csv(std::ostream& os, const CfGrid& grid);

}  // namespace ldtv
