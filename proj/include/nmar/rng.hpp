#ifndef NMAR_RNG_HPP
#define NMAR_RNG_HPP

#include <cstdint>

namespace nmar {

/// Counter-based generator built on the SplitMix64 finalizer.
///
/// State is (key, counter). Draw i returns mix(key + (i + 1) * GAMMA) and
/// increments the counter. `stream(seed, index)` derives an independent key
/// as mix(seed ^ mix(index + GAMMA)), so stream j of seed s is the same
/// sequence in every implementation and independent of how many other
/// streams were consumed.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr CounterRng stream(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(mix(seed ^ mix(index + kGamma)));
  }

  constexpr std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  constexpr bool bernoulli(double p) { return uniform() < p; }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nmar

#endif  // NMAR_RNG_HPP
