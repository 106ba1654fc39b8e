#include "ldtv/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ldtv/core/error.hpp"
#include "ldtv/core/parallel.hpp"

namespace ldtv {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_eps(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidArgument("noise: eps must lie in [0,1]");
}

// Partial Fisher-Yates: first k entries of idx become a uniform k-subset.
void random_subset(CounterRng& rng, std::vector<int>& idx, int k) {
  std::iota(idx.begin(), idx.end(), 0);
  const int n = int(idx.size());
  for (int i = 0; i < k; ++i) {
    int j = i + int(rng.below(std::uint64_t(n - i)));
    std::swap(idx[i], idx[j]);
  }
}

int pick(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return int(std::min<std::ptrdiff_t>(it - cdf.begin(), std::ptrdiff_t(cdf.size()) - 1));
}

}  // namespace

int dimension(const NullSpec& spec) {
  return std::visit([](const auto& s) { return s.n; }, spec);
}

Domain domain_of(const NullSpec& spec) {
  return std::visit(overloaded{[](const BooleanProduct&) { return Domain::kBoolean; },
                               [](const GaussVector&) { return Domain::kVector; },
                               [](const GaussWigner&) { return Domain::kMatrix; }},
                    spec);
}

const NullSpec& base_of(const ModelSpec& spec) {
  if (auto* p = std::get_if<PlantedSpec>(&spec)) return p->base;
  return std::get<NullSpec>(spec);
}

void validate(const ModelSpec& spec) {
  const NullSpec& base = base_of(spec);
  const int n = dimension(base);
  require(n >= 1, "model: n must be >= 1");
  if (auto* b = std::get_if<BooleanProduct>(&base))
    require(b->gamma > 0.0 && b->gamma < 1.0, "model: gamma must lie in (0,1)");
  auto* planted = std::get_if<PlantedSpec>(&spec);
  if (!planted) return;
  const Domain d = domain_of(base);
  std::visit(
      overloaded{
          [&](const BiasedProduct& k) {
            require(d == Domain::kBoolean, "BiasedProduct needs a BooleanProduct base");
            double g = std::get<BooleanProduct>(base).gamma + k.eta;
            require(g > 0.0 && g < 1.0, "BiasedProduct: gamma + eta must lie in (0,1)");
          },
          [&](const WeightConditioned& k) {
            require(d == Domain::kBoolean, "WeightConditioned needs a BooleanProduct base");
            require(!k.weights.empty(), "WeightConditioned: empty weight set");
            for (int w : k.weights) require(w >= 0 && w <= n, "WeightConditioned: weight outside [0,n]");
          },
          [&](const SpikedMean& k) {
            require(d == Domain::kVector, "SpikedMean needs a GaussVector base");
            require(std::isfinite(k.lambda), "SpikedMean: lambda must be finite");
          },
          [&](const QuadratureProduct& k) {
            require(d == Domain::kVector, "QuadratureProduct needs a GaussVector base");
            require(k.m >= 2 && k.m <= 200, "QuadratureProduct: m must lie in [2,200]");
          },
          [&](const WignerSpike& k) {
            require(d == Domain::kMatrix, "WignerSpike needs a GaussWigner base");
            require(k.sparsity >= 1 && k.sparsity <= n, "WignerSpike: sparsity must lie in [1,n]");
            require(std::isfinite(k.lambda), "WignerSpike: lambda must be finite");
          }},
      planted->kind);
}

std::string describe(const ModelSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  auto base_str = [&](const NullSpec& b) {
    std::visit(overloaded{[&](const BooleanProduct& s) {
                            os << "BooleanProduct(n=" << s.n << ",gamma=" << s.gamma << ")";
                          },
                          [&](const GaussVector& s) { os << "GaussVector(n=" << s.n << ")"; },
                          [&](const GaussWigner& s) {
                            os << "GaussWigner(n=" << s.n << ",diag=N(0,1))";
                          }},
               b);
  };
  if (auto* p = std::get_if<PlantedSpec>(&spec)) {
    std::visit(overloaded{[&](const BiasedProduct& k) { os << "BiasedProduct(eta=" << k.eta << ")"; },
                          [&](const WeightConditioned& k) {
                            os << "WeightConditioned(W=";
                            for (std::size_t i = 0; i < k.weights.size(); ++i)
                              os << (i ? ";" : "") << k.weights[i];
                            os << ")";
                          },
                          [&](const SpikedMean& k) { os << "SpikedMean(lambda=" << k.lambda << ")"; },
                          [&](const QuadratureProduct& k) { os << "QuadratureProduct(m=" << k.m << ")"; },
                          [&](const WignerSpike& k) {
                            os << "WignerSpike(lambda=" << k.lambda << ",sparsity=" << k.sparsity << ")";
                          }},
               p->kind);
    os << " over ";
  }
  base_str(base_of(spec));
  return os.str();
}

// ---------------------------------------------------------------------------

Sampler::Sampler(ModelSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  n_ = dimension(base_of(spec_));
  domain_ = domain_of(base_of(spec_));
  if (auto* p = std::get_if<PlantedSpec>(&spec_)) {
    if (auto* q = std::get_if<QuadratureProduct>(&p->kind)) {
      auto rule = gauss_hermite(q->m);
      nodes_ = rule.nodes;
      cdf_.resize(rule.weights.size());
      std::partial_sum(rule.weights.begin(), rule.weights.end(), cdf_.begin());
    } else if (auto* w = std::get_if<WeightConditioned>(&p->kind)) {
      auto law = make_weight_law(n_, std::get<BooleanProduct>(p->base).gamma);
      std::vector<int> ws = w->weights;
      std::sort(ws.begin(), ws.end());
      ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
      double acc = 0.0;
      for (int x : ws) {
        acc += law.prob(x);
        cdf_.push_back(acc);
        nodes_.push_back(x);
      }
      if (!(acc > 0.0)) throw InvalidArgument("WeightConditioned: weight set has zero null mass");
      for (auto& c : cdf_) c /= acc;
    }
  }
}

void fill_wigner(CounterRng& rng, Eigen::MatrixXd& out) {
  const Eigen::Index n = out.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      double g = rng.normal();
      out(i, j) = g;
      out(j, i) = g;
    }
}

void Sampler::draw_boolean(std::uint64_t seed, std::uint64_t index, std::span<Sign> out) const {
  require(domain_ == Domain::kBoolean, "draw_boolean: model is not Boolean");
  require(int(out.size()) == n_, "draw_boolean: wrong output size");
  CounterRng rng(seed, Stream::kSample, index);
  const auto& base = std::get<BooleanProduct>(base_of(spec_));
  double p = base.gamma;
  if (auto* pl = std::get_if<PlantedSpec>(&spec_)) {
    if (auto* b = std::get_if<BiasedProduct>(&pl->kind)) {
      p = base.gamma + b->eta;
    } else if (std::holds_alternative<WeightConditioned>(pl->kind)) {
      int w = int(nodes_[pick(cdf_, rng.uniform())]);
      std::vector<int> idx(n_);
      random_subset(rng, idx, w);
      std::fill(out.begin(), out.end(), Sign(-1));
      for (int i = 0; i < w; ++i) out[idx[i]] = 1;
      return;
    }
  }
  for (auto& s : out) s = rng.bernoulli(p) ? 1 : -1;
}

void Sampler::draw_vector(std::uint64_t seed, std::uint64_t index, std::span<double> out) const {
  require(domain_ == Domain::kVector, "draw_vector: model is not a Gaussian vector");
  require(int(out.size()) == n_, "draw_vector: wrong output size");
  CounterRng rng(seed, Stream::kSample, index);
  if (auto* pl = std::get_if<PlantedSpec>(&spec_)) {
    if (auto* s = std::get_if<SpikedMean>(&pl->kind)) {
      const double shift = (rng.bernoulli(0.5) ? 1.0 : -1.0) * s->lambda / std::sqrt(double(n_));
      for (auto& x : out) x = rng.normal() + shift;
      return;
    }
    if (std::holds_alternative<QuadratureProduct>(pl->kind)) {
      for (auto& x : out) x = nodes_[pick(cdf_, rng.uniform())];
      return;
    }
  }
  for (auto& x : out) x = rng.normal();
}

void Sampler::draw_matrix(std::uint64_t seed, std::uint64_t index, Eigen::MatrixXd& out) const {
  require(domain_ == Domain::kMatrix, "draw_matrix: model is not a Wigner matrix");
  out.resize(n_, n_);
  CounterRng rng(seed, Stream::kSample, index);
  fill_wigner(rng, out);
  auto* pl = std::get_if<PlantedSpec>(&spec_);
  if (!pl) return;
  const auto& k = std::get<WignerSpike>(pl->kind);
  std::vector<int> idx(n_);
  random_subset(rng, idx, k.sparsity);
  std::vector<double> u(k.sparsity);
  const double scale = 1.0 / std::sqrt(double(k.sparsity));
  for (auto& v : u) v = rng.bernoulli(0.5) ? scale : -scale;
  for (int a = 0; a < k.sparsity; ++a)
    for (int b = 0; b < k.sparsity; ++b) out(idx[a], idx[b]) += k.lambda * u[a] * u[b];
}

// ---------------------------------------------------------------------------

std::span<const double> SampleBatch::vector(std::uint64_t i) const {
  require(domain == Domain::kVector && i < count, "SampleBatch::vector: bad access");
  return {values.data() + i * n, std::size_t(n)};
}

std::span<const Sign> SampleBatch::boolean(std::uint64_t i) const {
  require(domain == Domain::kBoolean && i < count, "SampleBatch::boolean: bad access");
  return {signs.data() + i * n, std::size_t(n)};
}

Eigen::Map<const Eigen::MatrixXd> SampleBatch::matrix(std::uint64_t i) const {
  require(domain == Domain::kMatrix && i < count, "SampleBatch::matrix: bad access");
  return {values.data() + i * std::uint64_t(n) * n, n, n};
}

SampleBatch sample(const ModelSpec& spec, std::uint64_t count, std::uint64_t seed) {
  require(count >= 1, "sample: count must be >= 1");
  Sampler sampler(spec);
  SampleBatch batch;
  batch.domain = sampler.domain();
  batch.n = sampler.n();
  batch.count = count;
  batch.seed = seed;
  batch.metadata = describe(spec);
  const std::uint64_t n = batch.n;
  switch (batch.domain) {
    case Domain::kBoolean:
      batch.signs.resize(count * n);
      map_chunks<int>(count, [&](std::uint64_t b, std::uint64_t e) {
        for (auto i = b; i < e; ++i) sampler.draw_boolean(seed, i, {batch.signs.data() + i * n, n});
        return 0;
      });
      break;
    case Domain::kVector:
      batch.values.resize(count * n);
      map_chunks<int>(count, [&](std::uint64_t b, std::uint64_t e) {
        for (auto i = b; i < e; ++i) sampler.draw_vector(seed, i, {batch.values.data() + i * n, n});
        return 0;
      });
      break;
    case Domain::kMatrix:
      batch.values.resize(count * n * n);
      map_chunks<int>(count, [&](std::uint64_t b, std::uint64_t e) {
        Eigen::MatrixXd m;
        for (auto i = b; i < e; ++i) {
          sampler.draw_matrix(seed, i, m);
          std::copy(m.data(), m.data() + n * n, batch.values.data() + i * n * n);
        }
        return 0;
      });
      break;
  }
  return batch;
}

// ---------------------------------------------------------------------------
// container

namespace {
constexpr char kMagic[8] = {'L', 'D', 'T', 'V', 'S', 'M', 'P', 'L'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw InvalidArgument("read_batch: truncated header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= T(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_batch(std::ostream& os, const SampleBatch& batch) {
  os.write(kMagic, 8);
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint8_t>(os, std::uint8_t(batch.domain));
  put_le<std::uint8_t>(os, 0);
  put_le<std::uint16_t>(os, 0);
  put_le<std::uint64_t>(os, std::uint64_t(batch.n));
  put_le<std::uint64_t>(os, batch.count);
  put_le<std::uint64_t>(os, batch.seed);
  put_le<std::uint32_t>(os, std::uint32_t(batch.metadata.size()));
  os.write(batch.metadata.data(), std::streamsize(batch.metadata.size()));
  if (batch.domain == Domain::kBoolean) {
    std::vector<unsigned char> bytes((batch.signs.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < batch.signs.size(); ++i)
      if (batch.signs[i] > 0) bytes[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
    os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  } else {
    for (double v : batch.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_le<std::uint64_t>(os, bits);
    }
  }
}

SampleBatch read_batch(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw InvalidArgument("read_batch: bad magic");
  if (get_le<std::uint32_t>(is) != kVersion) throw InvalidArgument("read_batch: unsupported version");
  SampleBatch b;
  auto tag = get_le<std::uint8_t>(is);
  if (tag < 1 || tag > 3) throw InvalidArgument("read_batch: unknown domain tag");
  b.domain = Domain(tag);
  get_le<std::uint8_t>(is);
  get_le<std::uint16_t>(is);
  b.n = int(get_le<std::uint64_t>(is));
  b.count = get_le<std::uint64_t>(is);
  b.seed = get_le<std::uint64_t>(is);
  b.metadata.resize(get_le<std::uint32_t>(is));
  if (!is.read(b.metadata.data(), std::streamsize(b.metadata.size())))
    throw InvalidArgument("read_batch: truncated metadata");
  const std::uint64_t n = b.n;
  if (b.domain == Domain::kBoolean) {
    b.signs.resize(b.count * n);
    std::vector<unsigned char> bytes((b.signs.size() + 7) / 8);
    if (!is.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size())))
      throw InvalidArgument("read_batch: truncated payload");
    for (std::size_t i = 0; i < b.signs.size(); ++i) b.signs[i] = (bytes[i / 8] >> (i % 8)) & 1u ? 1 : -1;
  } else {
    b.values.resize(b.count * n * (b.domain == Domain::kMatrix ? n : 1));
    for (auto& v : b.values) {
      auto bits = get_le<std::uint64_t>(is);
      std::memcpy(&v, &bits, 8);
    }
  }
  return b;
}

void write_batch_csv(std::ostream& os, const SampleBatch& batch) {
  auto old = os.precision(17);
  const int n = batch.n;
  if (batch.domain == Domain::kMatrix) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) os << (i || j ? "," : "") << "m_" << i << "_" << j;
  } else {
    for (int i = 0; i < n; ++i) os << (i ? "," : "") << "x" << i;
  }
  os << '\n';
  for (std::uint64_t s = 0; s < batch.count; ++s) {
    switch (batch.domain) {
      case Domain::kBoolean: {
        auto x = batch.boolean(s);
        for (int i = 0; i < n; ++i) os << (i ? "," : "") << int(x[i]);
        break;
      }
      case Domain::kVector: {
        auto x = batch.vector(s);
        for (int i = 0; i < n; ++i) os << (i ? "," : "") << x[i];
        break;
      }
      case Domain::kMatrix: {
        auto m = batch.matrix(s);
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) os << (i || j ? "," : "") << m(i, j);
        break;
      }
    }
    os << '\n';
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------

std::vector<Sign> apply_boolean_noise(std::span<const Sign> x, double eps, double gamma,
                                      std::uint64_t seed, std::uint64_t index) {
  check_eps(eps);
  require(gamma > 0.0 && gamma < 1.0, "apply_boolean_noise: gamma must lie in (0,1)");
  CounterRng rng(seed, Stream::kNoise, index);
  std::vector<Sign> out(x.begin(), x.end());
  for (auto& s : out) {
    const bool resample = rng.uniform() < eps;
    const bool plus = rng.uniform() < gamma;
    if (resample) s = plus ? 1 : -1;
  }
  return out;
}

std::vector<double> apply_ou_noise(std::span<const double> x, double eps, std::uint64_t seed,
                                   std::uint64_t index) {
  check_eps(eps);
  CounterRng rng(seed, Stream::kNoise, index);
  const double a = std::sqrt(1.0 - eps), b = std::sqrt(eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * rng.normal();
  return out;
}

Eigen::MatrixXd apply_ou_noise(const Eigen::MatrixXd& x, double eps, std::uint64_t seed,
                               std::uint64_t index) {
  check_eps(eps);
  require(x.rows() == x.cols(), "apply_ou_noise: matrix must be square");
  CounterRng rng(seed, Stream::kNoise, index);
  Eigen::MatrixXd g(x.rows(), x.cols());
  fill_wigner(rng, g);
  return std::sqrt(1.0 - eps) * x + std::sqrt(eps) * g;
}

WeightLaw noisy_weight_law(const WeightLaw& pi, double eps, double gamma) {
  check_eps(eps);
  require(gamma > 0.0 && gamma < 1.0, "noisy_weight_law: gamma must lie in (0,1)");
  const int n = pi.n();
  const double keep = 1.0 - eps * (1.0 - gamma);  // +1 stays +1
  const double flip = eps * gamma;                // -1 becomes +1
  std::vector<long double> out(n + 1, 0.0L);
  constexpr double kTiny = 1e-300;
  for (int w = 0; w <= n; ++w) {
    const double pw = pi.prob(w);
    if (pw == 0.0) continue;
    auto a = binomial_pmf(w, keep);
    auto b = binomial_pmf(n - w, flip);
    int alo = 0, ahi = w, blo = 0, bhi = n - w;
    while (alo < ahi && a[alo] < kTiny) ++alo;
    while (ahi > alo && a[ahi] < kTiny) --ahi;
    while (blo < bhi && b[blo] < kTiny) ++blo;
    while (bhi > blo && b[bhi] < kTiny) --bhi;
    for (int i = alo; i <= ahi; ++i) {
      const long double pa = (long double)pw * a[i];
      for (int j = blo; j <= bhi; ++j) out[i + j] += pa * b[j];
    }
  }
  long double total = 0.0L;
  for (auto v : out) total += v;
  std::vector<double> pmf(n + 1);
  for (int w = 0; w <= n; ++w) pmf[w] = double(out[w] / total);
  return WeightLaw::from_pmf(n, pi.gamma(), std::move(pmf));
}

WeightLaw weight_law_of(const ModelSpec& spec) {
  validate(spec);
  const auto* base = std::get_if<BooleanProduct>(&base_of(spec));
  if (!base) throw InvalidArgument("weight_law_of: not a Boolean model");
  auto* pl = std::get_if<PlantedSpec>(&spec);
  if (!pl) return make_weight_law(base->n, base->gamma);
  if (auto* b = std::get_if<BiasedProduct>(&pl->kind))
    return WeightLaw::binomial(base->n, base->gamma, base->gamma + b->eta);
  const auto& wc = std::get<WeightConditioned>(pl->kind);
  auto null = binomial_pmf(base->n, base->gamma);
  std::vector<double> pmf(base->n + 1, 0.0);
  long double total = 0.0L;
  for (int w = 0; w <= base->n; ++w)
    if (std::find(wc.weights.begin(), wc.weights.end(), w) != wc.weights.end()) {
      pmf[w] = null[w];
      total += null[w];
    }
  if (!(total > 0.0L)) throw InvalidArgument("WeightConditioned: weight set has zero null mass");
  for (auto& p : pmf) p = double(p / total);
  return WeightLaw::from_pmf(base->n, base->gamma, std::move(pmf));
}

PlantedSpec quadrature_product_spec(int m, int n) {
  require(m >= 2, "quadrature_product_spec: m must be >= 2");
  require(n >= 1, "quadrature_product_spec: n must be >= 1");
  return PlantedSpec{QuadratureProduct{m}, GaussVector{n}};
}

}  // namespace ldtv
