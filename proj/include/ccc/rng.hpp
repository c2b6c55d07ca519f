#pragma once

#include <cstdint>

namespace ccc {

// 64-bit finalizer used both as the generator step and for key derivation.
constexpr inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives an independent child seed from (seed, stream). Used to give every
// episode, bank game, and policy init its own stream: results never depend
// on scheduling or completion order.
constexpr inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return mix64(seed ^ mix64(stream ^ 0xD1B54A32D192ED03ull));
}

// Compile-time FNV-1a tag so call sites can write derive_seed(s, "banks").
constexpr inline uint64_t stream_tag(const char* s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (; *s; ++s) h = (h ^ static_cast<uint8_t>(*s)) * 0x100000001B3ull;
  return h;
}

constexpr inline uint64_t derive_seed(uint64_t seed, const char* tag) {
  return derive_seed(seed, stream_tag(tag));
}

// Counter-based generator (splitmix64). State is a single word, copying a
// state forks the stream, and identical seeds give identical sequences on
// every platform: integer math plus an exact u64->double conversion.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // Uniform in [0, 1) with 53 random bits; exact on IEEE doubles.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Uniform in [0, bound); rejection sampling keeps the draw unbiased.
  uint32_t next_below(uint32_t bound) {
    uint64_t limit = (0x100000000ull / bound) * bound;
    uint64_t v;
    do {
      v = next_u64() >> 32;
    } while (v >= limit);
    return static_cast<uint32_t>(v % bound);
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

}  // namespace ccc
