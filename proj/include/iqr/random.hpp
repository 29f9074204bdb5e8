#pragma once

#include <array>
#include <cstdint>

namespace iqr {

/// splitmix64 step; used to expand a 64-bit seed into generator state.
std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** 1.0 (Blackman and Vigna). Same seed, same stream on every
/// platform; all transforms below are written out rather than taken from
/// <random>, whose distributions are implementation defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n), n > 0, without modulo bias.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal variate (Marsaglia polar method).
  double normal();
  double normal(double mean, double sd);
  /// Gamma(shape, 1) variate (Marsaglia and Tsang).
  double gamma(double shape);
  /// Beta(a, b) variate on [0, 1].
  double beta(double a, double b);

  /// Independent stream for worker `index`, derived from `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace iqr
