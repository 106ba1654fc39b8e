#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ldtv {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: output depends
/// only on (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Well-separated stream identifiers so independent consumers of one seed
/// never share counter space.
enum class Stream : std::uint64_t {
  kSample = 1,
  kNoise = 2,
  kInnerMc = 3,
  kSplit = 4,
  kCorpus = 5,
  kGrid = 6,
  kPower = 7,
  kAuxiliary = 8,
};

/// Counter-based generator keyed by (seed, stream, index). Two generators
/// with the same triple produce identical sequences; different indices give
/// independent sequences, so per-sample draws do not depend on scheduling.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index)
      : CounterRng(seed, static_cast<std::uint64_t>(stream), index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via the ziggurat method.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t index_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ldtv
