#pragma once

#include <cstdint>

namespace dsoftmax {

// Counter-based generator: splitmix64 evaluated at (seed + position * gamma).
// The (seed, position) pair is the complete state, so the same seed and call
// sequence always reproduce the same stream. Independent substreams for
// unrelated purposes (sampling, shuffling, metrics) come from derive().
class RngState {
 public:
  RngState() = default;
  explicit RngState(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return pos_; }

  std::uint64_t next_u64() {
    ++pos_;
    return mix64(seed_ + pos_ * 0x9E3779B97F4A7C15ull);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two draws and keeps no
  // cached value, so (seed, position) stays the full state.
  double next_gaussian();

  // Uniform on [0, bound); rejection keeps it unbiased. bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);

  // Independent substream keyed by tag; ignores the current position.
  RngState derive(std::uint64_t tag) const {
    return RngState(mix64(seed_ ^ mix64(tag + 0xD1B54A32D192ED03ull)));
  }

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t pos_ = 0;
};

}  // namespace dsoftmax
