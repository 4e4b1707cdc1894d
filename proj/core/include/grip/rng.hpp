#pragma once

#include <cstdint>
#include <string_view>

namespace grip {

// Deterministic splittable PRNG built on splitmix64. Every consumer owns its
// stream; there is no global generator anywhere in the library. Identical
// seed + identical call sequence => bit-identical draws, on every platform.
//
// split() derives an independent child stream from the current state and a
// label without advancing the parent, so sibling streams ("weights", "noise",
// ...) can be reordered in code without perturbing each other.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  double next_double();                    // uniform [0, 1)
  double uniform(double lo, double hi);    // uniform [lo, hi)
  double gaussian();                       // standard normal, two draws per call
  uint64_t below(uint64_t n);              // uniform [0, n), rejection sampled

  SeededRng split(uint64_t label) const;
  SeededRng split(std::string_view label) const;

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// FNV-1a, used for stream labels and for artifact content hashes.
uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(std::string_view s);

}  // namespace grip
