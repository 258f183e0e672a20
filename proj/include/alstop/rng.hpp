#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace alstop {

// Seeded generator whose outputs depend only on the seed, not on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Uniform double in [0, 1) with 53 bits of randomness.
  double uniform();

  // Standard normal via Box-Muller.
  double normal();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // `count` distinct elements of `population`, in draw order.
  template <class T>
  std::vector<T> sample(std::span<const T> population, std::size_t count) {
    std::vector<T> pool(population.begin(), population.end());
    if (count > pool.size()) count = pool.size();
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t j = i + uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Combines a seed with a stream tag into a new, decorrelated seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace alstop
