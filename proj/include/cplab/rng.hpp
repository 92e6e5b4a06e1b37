#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace cplab {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derive an independent stream key from a root key and up to three words.
inline constexpr std::uint64_t derive_key(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                                          std::uint64_t c = 0) {
  std::uint64_t k = splitmix64(root ^ 0x6A09E667F3BCC909ULL);
  k = splitmix64(k ^ a);
  k = splitmix64(k ^ (b + 0x3C6EF372FE94F82BULL));
  return splitmix64(k ^ (c + 0xA54FF53A5F1D36F1ULL));
}

/// Stream key of lattice vertex (x, y).
inline std::uint64_t vertex_key(std::uint64_t root, std::int64_t x, std::int64_t y) {
  return derive_key(root, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y));
}

/// Counter-based generator: output i is a keyed hash of i, so streams derived
/// with derive_key never depend on the order in which they are consumed.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform on the open interval (0,1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  int below(int n) {
    const int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cplab
