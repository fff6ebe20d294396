#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace occugrasp {

/// Seedable random source used everywhere reproducibility matters.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not (their algorithms vary across
/// library vendors), so every conversion to doubles, bounded integers and
/// normals is implemented here:
///   - uniform(): top 53 bits of one engine draw, scaled by 2^-53
///   - index(n): rejection sampling on the largest multiple of n below 2^64
///   - normal(): Box-Muller on two uniform() draws, second value cached
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, stream), e.g. (run seed, step index).
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n);
  double normal();

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer over a combination of two words.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace occugrasp
