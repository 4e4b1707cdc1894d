#pragma once

#include <cstdint>

#include "grip/common.hpp"
#include "grip/environment.hpp"

namespace grip {

// The culprit environment: three visible tokens A, B, C plus a phantom
// partner D that the sampling distribution essentially never keeps. The task
// succeeds if and only if C is dropped (D's pair bonus clears the threshold
// on its own), so C is the sole culprit while A and B are causally inert.
// Full retention of all four tokens is also correct, which makes the
// set-level comparison honest: the uniform-credit loss sees a genuinely
// rewarded mask and still cannot tell C apart from A and B.
SyntheticTask credit_demo_task();

struct CreditDemoReport {
  Vec probs;                 // sampling distribution over (A, B, C, D)
  int set_level_reward = 0;  // outcome of the full-retention mask
  Vec set_level_gradient;    // d(set-level loss)/ds_t at the full mask
  Vec mc_estimate;           // score-function reward-gradient estimate per token
  Vec mc_standard_error;
  int rollouts = 0;
  uint64_t seed = 0;
};

// Runs both credit-assignment paths: the closed-form set-level gradient on
// the full-retention mask, and the Monte Carlo score-function estimate over
// independently sampled Bernoulli masks (no repair of all-zero draws; the
// empty mask is a legal, correct outcome here).
CreditDemoReport run_credit_demo(int rollouts, uint64_t seed);

}  // namespace grip
