#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

// All randomness in the project flows through this wrapper. The engine is
// std::mt19937_64 (fully specified by the C++ standard, so its raw output is
// identical on every platform); the distribution transforms live here instead
// of <random> because the standard leaves those implementation-defined.

namespace sdf2net::rng {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed derivation: one splitmix64 step of the seed advanced by the
/// stream tag. Every component that needs its own stream documents its tag
/// in `stream` below.
inline uint64_t derive(uint64_t seed, uint64_t stream_tag) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * stream_tag);
}

namespace stream {
inline constexpr uint64_t kSplit = 1;       // stratified train/test split
inline constexpr uint64_t kInit = 2;        // parameter initialization
inline constexpr uint64_t kShuffle = 3;     // per-epoch sample shuffling
inline constexpr uint64_t kDropout = 4;     // dropout masks
inline constexpr uint64_t kValidation = 5;  // validation carve-out
inline constexpr uint64_t kScene = 6;       // synthetic scene sampling
inline constexpr uint64_t kNoise = 7;       // label-noise injection
inline constexpr uint64_t kSweep = 8;       // sweep trial seeds
}  // namespace stream

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n) by rejection. n must be > 0.
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller; the second deviate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Fisher-Yates shuffle using below().
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sdf2net::rng
