#include "grip/credit.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

#include "grip/mask.hpp"

namespace grip {

namespace {

constexpr int kTokens = 4;
constexpr int kCulprit = 2;   // C
constexpr int kPhantom = 3;   // D

// Keep probabilities for the Monte Carlo path. The phantom partner is all
// but deterministic so correctness reduces to "was C dropped".
const double kProbs[kTokens] = {0.6, 0.6, 0.5, 1e-6};

}  // namespace

SyntheticTask credit_demo_task() {
  SyntheticTask task;
  task.grid.height = 2;
  task.grid.width = 2;
  task.grid.feature_dim = 8;
  task.grid.features.assign(kTokens, Vec(8, 0.0));
  task.grid.heuristic_scores = {0.2, 0.2, 0.1, 2.0};
  for (int t = 0; t < kTokens; ++t) {
    task.grid.features[t][0] = task.grid.heuristic_scores[t];
    task.grid.features[t][3] = static_cast<double>(t / 2) - 0.5;
    task.grid.features[t][4] = static_cast<double>(t % 2) - 0.5;
  }
  task.oracle.importance_weights = {0.2, 0.2, 0.1, 2.0};
  task.oracle.misleading_pairs.push_back({kCulprit, kPhantom, 2.1});
  task.oracle.decision_threshold = 0.6;
  task.oracle.num_classes = 4;
  task.oracle.task_mode = TaskMode::verifiable;
  task.label = 0;
  task.difficulty = Level::LV3;
  task.seed = 0;
  return task;
}

CreditDemoReport run_credit_demo(int rollouts, uint64_t seed) {
  require(rollouts > 1, "credit demo needs at least two rollouts");
  SyntheticTask task = credit_demo_task();

  CreditDemoReport report;
  report.probs.assign(kProbs, kProbs + kTokens);
  report.rollouts = rollouts;
  report.seed = seed;

  // Set-level path on the full-retention mask, which this task genuinely
  // rewards. loss = -R sum_kept ln p - (1-R) sum_dropped ln(1-p), so
  // d loss / d s_t = -R a_t (1 - p_t) + (1 - R) (1 - a_t) p_t: every kept
  // token of a rewarded mask gets the same-signed push, culprit included.
  RetentionMask full = RetentionMask::ones(kTokens);
  TaskOutcome full_out = evaluate(task, full);
  report.set_level_reward = full_out.correct ? 1 : 0;
  report.set_level_gradient.assign(kTokens, 0.0);
  for (int t = 0; t < kTokens; ++t) {
    report.set_level_gradient[t] = -report.set_level_reward * (1.0 - kProbs[t]);
  }

  // Monte Carlo score-function path over raw Bernoulli masks. No all-zero
  // repair: the empty mask clears the threshold through the pair bonus, so
  // every draw is a legal rollout.
  SeededRng rng = SeededRng(seed).split("credit-demo");
  std::vector<uint8_t> bits(static_cast<size_t>(rollouts));
  std::vector<uint8_t> rewards(static_cast<size_t>(rollouts));
  double reward_sum = 0.0;
  for (int j = 0; j < rollouts; ++j) {
    uint8_t packed = 0;
    RetentionMask mask = RetentionMask::zeros(kTokens);
    for (int t = 0; t < kTokens; ++t) {
      bool keep = rng.next_double() < kProbs[t];
      mask.set(t, keep);
      if (keep) packed |= static_cast<uint8_t>(1u << t);
    }
    TaskOutcome out = evaluate(task, mask);
    bits[static_cast<size_t>(j)] = packed;
    rewards[static_cast<size_t>(j)] = out.correct ? 1 : 0;
    reward_sum += out.correct ? 1.0 : 0.0;
  }
  double reward_mean = reward_sum / rollouts;

  report.mc_estimate.assign(kTokens, 0.0);
  report.mc_standard_error.assign(kTokens, 0.0);
  for (int t = 0; t < kTokens; ++t) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int j = 0; j < rollouts; ++j) {
      double a = (bits[static_cast<size_t>(j)] >> t) & 1u ? 1.0 : 0.0;
      double q = (rewards[static_cast<size_t>(j)] - reward_mean) * (a - kProbs[t]);
      sum += q;
      sum_sq += q * q;
    }
    double mean = sum / rollouts;
    double var = (sum_sq - rollouts * mean * mean) / (rollouts - 1);
    if (var < 0.0) var = 0.0;
    report.mc_estimate[t] = mean;
    report.mc_standard_error[t] = std::sqrt(var / rollouts);
  }
  return report;
}

}  // namespace grip
