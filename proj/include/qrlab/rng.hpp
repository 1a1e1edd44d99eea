#pragma once

// Deterministic randomness utilities. std::mt19937_64's raw output is
// pinned by the standard, but the <random> distributions are not, so all
// sampling goes through the routines here to keep runs byte-identical
// across compilers.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace qrlab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stable per-cell seed: hash of (master seed, size, agent kind, trial index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t size,
                                 std::string_view kind, std::uint64_t trial) {
  std::uint64_t st = master;
  splitmix64(st);
  st ^= splitmix64(st) + size;
  st ^= splitmix64(st) + hash_str(kind);
  st ^= splitmix64(st) + trial;
  return splitmix64(st);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform integer in [0, bound) via rejection sampling.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % bound;
  }

  int bit() { return static_cast<int>(eng_() >> 63); }

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace qrlab
