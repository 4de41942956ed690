#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace vagc {

// Counter-based pseudo-random generator. The i-th output is a pure function
// of (key, i): out_i = mix64(key + i * GAMMA) with the SplitMix64 finalizer.
// State is just (key, counter), so it can be serialized exactly and restored
// for bit-identical continuation. No ambient entropy is ever consulted.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(uint64_t key, uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }
  void set_state(uint64_t key, uint64_t counter) {
    key_ = key;
    counter_ = counter;
  }

  // Derives an independent stream; does not advance this generator.
  CounterRng substream(uint64_t tag) const {
    return CounterRng(mix64(key_ ^ mix64(tag + kGamma)));
  }

  uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1. Multiply-shift map of a 64-bit draw;
  // bias is at most n / 2^64.
  uint64_t uniform_int(uint64_t n) {
    return uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller. Consumes exactly two draws.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace vagc
