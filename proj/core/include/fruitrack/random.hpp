#pragma once

#include <cstdint>
#include <random>

namespace fruitrack::sim {

/// Seeded stream built on std::mt19937_64, whose output sequence is fixed by
/// the C++ standard. The std:: distributions are not (their algorithms vary
/// between standard libraries), so the draws below are implemented here to keep
/// datasets byte-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Box-Muller; both variates of a pair are used.
  double gaussian(double mean = 0.0, double sigma = 1.0);
  /// Knuth's multiplication method; fine for the small rates used here.
  long poisson(double lambda);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer: derives independent stream seeds from (seed, key).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

}  // namespace fruitrack::sim
