#pragma once

#include <string>

#include "grip/scorer.hpp"

namespace grip {

// Binary scorer checkpoint: magic "GRIP", u32 format version, u32 hidden
// width, u32 feature dim, u32 layer count, then per layer (u32 in, u32 out,
// u32 activation), then every weight matrix (row-major) followed by its bias,
// all little-endian IEEE-754 doubles, in ScorerParams::flatten() order.
// Round-trips are bit-exact.
void save_checkpoint(const std::string& path, const ScorerParams& params);
ScorerParams load_checkpoint(const std::string& path);

}  // namespace grip
