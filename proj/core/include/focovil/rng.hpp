#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace focovil {

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a base
/// seed and a stream index so that per-scene / per-epoch streams do not
/// depend on generation order.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Portable random source.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the C++ standard).
/// The distributions are implemented here rather than taken from <random>,
/// whose distribution algorithms are implementation-defined:
///   uniform()  = (next() >> 11) * 2^-53, in [0, 1)
///   normal()   = Box-Muller, one draw per call (the sine branch is discarded)
///   below(n)   = modulo with rejection of the biased tail
///   shuffle()  = Fisher-Yates from the back
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace focovil
