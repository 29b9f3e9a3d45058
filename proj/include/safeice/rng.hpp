#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace safeice {

/// Seeded random stream. Identical seeds give identical draw sequences on every
/// platform: the engine is mt19937_64 and every variate is built here rather
/// than through the implementation-defined std:: distributions.
///
/// Substreams come from split(key): the child seed is a SplitMix64 hash of
/// (seed, key), so split(i) and split(j) are unrelated for i != j. A stream must
/// not be shared across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  RngStream split(std::uint64_t key) const;

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 uses the U^{1/shape} boost.
  double gamma(double shape, double scale = 1.0);
  double beta(double a, double b);
  /// Index drawn with probability proportional to weights (need not be normalized).
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace safeice
