#pragma once

#include <cstdint>
#include <vector>

#include "grip/common.hpp"

namespace grip {

// Binary keep/drop decision per token. `kept` is maintained as the exact
// popcount of `bits` by every mutator.
struct RetentionMask {
  std::vector<uint8_t> bits;
  int kept = 0;

  static RetentionMask ones(int n) {
    require(n >= 0, "RetentionMask: negative size");
    RetentionMask m;
    m.bits.assign(n, 1);
    m.kept = n;
    return m;
  }

  static RetentionMask zeros(int n) {
    require(n >= 0, "RetentionMask: negative size");
    RetentionMask m;
    m.bits.assign(n, 0);
    m.kept = 0;
    return m;
  }

  static RetentionMask from_bits(std::vector<uint8_t> bits) {
    RetentionMask m;
    m.bits = std::move(bits);
    m.kept = 0;
    for (uint8_t b : m.bits) {
      require(b == 0 || b == 1, "RetentionMask: bits must be 0 or 1");
      m.kept += b;
    }
    return m;
  }

  int size() const { return static_cast<int>(bits.size()); }
  bool get(int i) const { return bits[i] != 0; }

  void set(int i, bool v) {
    kept += static_cast<int>(v) - static_cast<int>(bits[i]);
    bits[i] = v ? 1 : 0;
  }

  bool operator==(const RetentionMask& other) const { return bits == other.bits; }
};

}  // namespace grip
