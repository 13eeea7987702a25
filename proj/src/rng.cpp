#include "dsoftmax/rng.hpp"

#include <cmath>
#include <numbers>

namespace dsoftmax {

double RngState::next_gaussian() {
  // u1 on (0, 1] so the log is finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngState::next_below(std::uint64_t bound) {
  // Reject the top partial block to stay unbiased.
  std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

}  // namespace dsoftmax
