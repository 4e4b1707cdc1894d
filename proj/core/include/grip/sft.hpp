#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "grip/budget.hpp"
#include "grip/environment.hpp"
#include "grip/scorer.hpp"

namespace grip {

struct SftConfig {
  double alpha_kl = 1.0;    // weight on the logit-KL term
  double beta_ratio = 10.0; // weight on the keep-ratio term
  int epochs = 0;
  double learning_rate = 0.01;
  // (first epoch, target equivalent-token count), piecewise constant,
  // non-increasing targets.
  std::vector<std::pair<int, double>> curriculum;
  int batch_size = 8;
  uint64_t seed = 0;
};

struct SftLossBreakdown {
  double l_distill = 0.0;
  double l_kl = 0.0;
  double l_ratio = 0.0;
  double total = 0.0;
};

// Set-level SFT loss: reward the whole kept set or penalize the whole
// dropped set uniformly. Kept for the credit-assignment comparison.
double sft_set_level_loss(const RetentionMask& mask, const Vec& probs, int reward);

SftLossBreakdown distill_losses(const TaskOutcome& student_outcome,
                                const Vec& student_pooled, const TeacherOutput& teacher,
                                const Vec& probs, double target_keep_ratio,
                                const SftConfig& config);

struct CurriculumPoint {
  double t_eq = 0.0;
  BudgetSpec budget;  // base budget with uniformly rescaled stage keep ratios
};

CurriculumPoint curriculum_target(const SftConfig& config, int epoch,
                                  const BudgetSpec& base);

// One sample's Eq-style multi-task loss. hard_selection=true is the training
// path (hard top-K forward, straight-through backward); false replaces the
// mask with the probabilities themselves everywhere, giving the smooth
// function that finite-difference tests can probe. flat_grad (optional)
// receives dL/dparams in ScorerParams::flatten() order, accumulated.
SftLossBreakdown sft_sample_losses(const ScorerParams& params, const SyntheticTask& task,
                                   const BudgetSpec& budget, const SftConfig& config,
                                   const ScorerOptions& options, bool hard_selection,
                                   Vec* flat_grad, bool* correct_out);

struct SftEpochLog {
  int epoch = 0;
  double t_eq_target = 0.0;
  double l_distill = 0.0, l_kl = 0.0, l_ratio = 0.0, total = 0.0;
  double mean_accuracy = 0.0;
};

struct SftResult {
  ScorerParams params;
  std::vector<SftEpochLog> log;
};

SftResult train_sft(const std::vector<SyntheticTask>& tasks, const SftConfig& config,
                    const ScorerParams& initial, const BudgetSpec& base_budget,
                    const ScorerOptions& options = {});

}  // namespace grip
