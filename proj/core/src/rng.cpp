#include "grip/rng.hpp"

#include <cmath>

#include "grip/common.hpp"

namespace grip {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

uint64_t SeededRng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double SeededRng::next_double() {
  // 53 mantissa bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  require(lo <= hi, "uniform: lo > hi");
  return lo + (hi - lo) * next_double();
}

double SeededRng::gaussian() {
  // Box-Muller without state carried between calls: simpler determinism
  // story at the cost of one discarded variate.
  double u1 = 1.0 - next_double();  // (0, 1]
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

uint64_t SeededRng::below(uint64_t n) {
  require(n > 0, "below: n must be positive");
  // Rejection sampling keeps the draw unbiased for every n.
  uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

SeededRng SeededRng::split(uint64_t label) const {
  // Child state mixes the parent state with the label through two rounds so
  // that distinct labels of the same parent land in unrelated regions.
  return SeededRng(mix64(mix64(state_ ^ 0xA0761D6478BD642Full) + label * kGolden));
}

SeededRng SeededRng::split(std::string_view label) const {
  return split(fnv1a64(label));
}

uint64_t fnv1a64(const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xCBF29CE484222325ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

}  // namespace grip
