#pragma once

// Null and planted distributions, noise channels, and exact noisy weight laws.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ldtv/core/rng.hpp"
#include "ldtv/orthopoly.hpp"

namespace ldtv {

// Boolean strings use the +-1 coding; +1 has probability gamma under the null.
using Sign = std::int8_t;

struct BooleanProduct {
  int n = 1;
  double gamma = 0.5;
};
struct GaussVector {
  int n = 1;
};
/// Symmetric matrix, off-diagonal N(0,1); diagonal N(0,1) independent.
struct GaussWigner {
  int n = 1;
};
using NullSpec = std::variant<BooleanProduct, GaussVector, GaussWigner>;

/// Marginal Ber(gamma + eta) in every coordinate.
struct BiasedProduct {
  double eta = 0.0;
};
/// Null conditioned on the weight lying in `weights`.
struct WeightConditioned {
  std::vector<int> weights;
};
/// x = g + (lambda / sqrt(n)) s 1 with a Rademacher sign s.
struct SpikedMean {
  double lambda = 0.0;
};
/// i.i.d. coordinates from the m-point Gauss-Hermite measure.
struct QuadratureProduct {
  int m = 2;
};
/// W + lambda u u^T, u uniform over `sparsity`-subsets with entries
/// +-1/sqrt(sparsity).
struct WignerSpike {
  double lambda = 0.0;
  int sparsity = 1;
};
using PlantedKind =
    std::variant<BiasedProduct, WeightConditioned, SpikedMean, QuadratureProduct, WignerSpike>;

struct PlantedSpec {
  PlantedKind kind;
  NullSpec base;
};

using ModelSpec = std::variant<NullSpec, PlantedSpec>;

enum class Domain : std::uint8_t { kBoolean = 1, kVector = 2, kMatrix = 3 };

int dimension(const NullSpec& spec);
Domain domain_of(const NullSpec& spec);
const NullSpec& base_of(const ModelSpec& spec);
/// Throws InvalidArgument if parameters are out of range or the planted kind
/// does not fit its base.
void validate(const ModelSpec& spec);
std::string describe(const ModelSpec& spec);

/// Per-index deterministic draws. Draw i depends only on (spec, seed, i).
class Sampler {
 public:
  explicit Sampler(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  int n() const { return n_; }
  Domain domain() const { return domain_; }

  void draw_boolean(std::uint64_t seed, std::uint64_t index, std::span<Sign> out) const;
  void draw_vector(std::uint64_t seed, std::uint64_t index, std::span<double> out) const;
  /// Fills a symmetric n x n matrix.
  void draw_matrix(std::uint64_t seed, std::uint64_t index, Eigen::MatrixXd& out) const;

 private:
  ModelSpec spec_;
  int n_ = 0;
  Domain domain_ = Domain::kVector;
  std::vector<double> cdf_;    // quadrature nodes or conditioned weights
  std::vector<double> nodes_;  // quadrature nodes
};

/// Fills a symmetric matrix with a fresh null Wigner draw.
void fill_wigner(CounterRng& rng, Eigen::MatrixXd& out);

struct SampleBatch {
  Domain domain = Domain::kVector;
  int n = 0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  std::string metadata;
  /// Vectors: count * n. Matrices: count * n * n, row-major per sample.
  std::vector<double> values;
  /// Boolean strings: count * n.
  std::vector<Sign> signs;

  std::span<const double> vector(std::uint64_t i) const;
  std::span<const Sign> boolean(std::uint64_t i) const;
  Eigen::Map<const Eigen::MatrixXd> matrix(std::uint64_t i) const;
  bool operator==(const SampleBatch&) const = default;
};

SampleBatch sample(const ModelSpec& spec, std::uint64_t count, std::uint64_t seed);

/// Binary container: 8-byte magic "LDTVSMPL", u32 version, u8 domain, three
/// zero bytes, u64 n, u64 count, u64 seed, u32 metadata length, metadata
/// bytes, then the payload (little-endian f64, or bits packed LSB-first
/// where 1 encodes +1).
void write_batch(std::ostream& os, const SampleBatch& batch);
SampleBatch read_batch(std::istream& is);
/// One row per sample. Matrices are written as their upper triangle.
void write_batch_csv(std::ostream& os, const SampleBatch& batch);

// ---------------------------------------------------------------------------
// Noise

/// Keeps each coordinate w.p. 1 - eps, otherwise resamples it from Ber(gamma).
std::vector<Sign> apply_boolean_noise(std::span<const Sign> x, double eps, double gamma,
                                      std::uint64_t seed, std::uint64_t index = 0);
/// sqrt(1 - eps) x + sqrt(eps) g.
std::vector<double> apply_ou_noise(std::span<const double> x, double eps, std::uint64_t seed,
                                   std::uint64_t index = 0);
/// Matrix form; g is a null Wigner draw.
Eigen::MatrixXd apply_ou_noise(const Eigen::MatrixXd& x, double eps, std::uint64_t seed,
                               std::uint64_t index = 0);

/// Exact weight law of T_eps x when x has a symmetric law with weight law pi.
WeightLaw noisy_weight_law(const WeightLaw& pi, double eps, double gamma);

/// Exact weight law of a Boolean model (null, BiasedProduct or
/// WeightConditioned).
WeightLaw weight_law_of(const ModelSpec& spec);

PlantedSpec quadrature_product_spec(int m, int n);

}  // namespace ldtv
