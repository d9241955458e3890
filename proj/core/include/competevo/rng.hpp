#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace competevo {

/// Deterministic splitmix64 stream. Bit-stable across platforms and
/// compilers, trivially serializable (the whole state is one word), cheap to
/// fork. Every randomized routine in the project draws from an Rng seeded via
/// derive_seed so that results depend only on the master seed and the logical
/// position of the draw, never on thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform01();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (no cached spare, so the stream has no
  /// hidden state).
  double normal();

  /// Uniform integer in [0, n). n must be > 0.
  std::uint32_t below(std::uint32_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(static_cast<std::uint32_t>(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Hash-combines a master seed with a logical path (generation, player,
/// episode index, ...) into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

}  // namespace competevo
