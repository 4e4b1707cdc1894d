#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace grip {

using Vec = std::vector<double>;

// Precondition violations are hard errors: token budgets and oracle

// definitions are cheap to validate and silently wrong numbers are not.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

}  // namespace grip
