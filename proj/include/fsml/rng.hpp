#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fsml {

// All randomness in the engine flows through this SplitMix64 generator.
// std::* distributions are deliberately avoided: their output differs across
// standard libraries, and artifacts must be reproducible bit-for-bit.

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Independent stream seed from (seed, salt, a, b). Used to give every
// episode/record/epoch its own generator so parallel order never matters.
inline uint64_t derive_seed(uint64_t seed, std::string_view salt, uint64_t a = 0,
                            uint64_t b = 0) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the salt
  for (unsigned char c : salt) h = (h ^ c) * 0x100000001b3ull;
  uint64_t x = mix64(seed ^ h);
  x = mix64(x ^ (a + 0x9e3779b97f4a7c15ull));
  x = mix64(x ^ (b + 0x9e3779b97f4a7c15ull));
  return x;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    return mix64(z);
  }

  // Unbiased integer in [0, bound) — Lemire's multiply-shift rejection.
  uint64_t below(uint64_t bound) {
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<uint64_t>(m);
    if (lo < bound) {
      uint64_t t = (0 - bound) % bound;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Inclusive range.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Marsaglia polar method: only sqrt/log, identical everywhere.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k entries of a partial Fisher–Yates over 0..n-1; sampled order kept.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(below(static_cast<uint64_t>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fsml
