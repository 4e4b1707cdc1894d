#pragma once

#include <cstdint>
#include <vector>

#include "grip/budget.hpp"
#include "grip/common.hpp"
#include "grip/environment.hpp"
#include "grip/scorer.hpp"

namespace grip {

// How a rollout's task-level reward is computed. Verifiable tasks pay 0/1 on
// correctness; open-ended tasks pay 1 - sigmoid(scale * (loss - loss_ref)),
// anchored at 0.5 when the rollout matches the reference policy's loss.
enum class RewardMode { verifiable, open_ended };

struct GrpoConfig {
  int group_size = 16;
  double clip_eps = 0.2;
  double kl_coeff = 0.01;
  double budget_penalty = 0.005;  // per equivalent token over target
  double reward_scale = 1.0;      // sharpness of the open-ended loss reward
  int iterations = 0;
  double learning_rate = 1e-3;
  int batch_tasks = 4;
  // Force the loss-based reward path for every task, including verifiable
  // ones. Ablation switch: the hybrid scheme routes verifiable tasks to the
  // exact 0/1 signal and only falls back to loss shaping elsewhere.
  bool disable_hybrid_reward = false;
  uint64_t seed = 0;
};

struct Rollout {
  RetentionMask mask = RetentionMask::ones(1);
  double log_prob_old = 0.0;      // under the policy that sampled the mask
  double log_prob_current = 0.0;  // refreshed by grpo_loss_and_grad
  double loss = 0.0;              // task loss of the masked forward pass
  bool correct = false;
  bool forced_keep = false;
  double t_eq_realized = 0.0;
  double r_task = 0.0;    // task-level reward before the budget penalty
  double reward = 0.0;    // r_task minus the overage hinge
  double advantage = 0.0; // group-normalized reward
};

// Equivalent-token cost a mask realizes under a budget. The policy decides
// the first stage; later stages are assumed to hit their nominal counts,
// capped by what stage one let through.
double rollout_equivalent_tokens(const BudgetSpec& budget, int kept);

// Task reward for one rollout under the chosen mode. loss_ref is ignored in
// verifiable mode.
double task_reward(const TaskOutcome& outcome, RewardMode mode, double loss_ref,
                   double reward_scale);

// r_task - budget_penalty * max(0, t_eq_realized - t_target).
double trajectory_reward(double r_task, double t_eq_realized, double t_target,
                         double budget_penalty);

// Group-relative advantages: (r - mean) / std with the population (divide by
// G) standard deviation. A degenerate group (std < 1e-12) gets all zeros.
Vec group_advantages(const Vec& rewards);

// Samples group_size masks from the Bernoulli field in `output`, runs the
// task on each, and fills everything except rewards and advantages.
std::vector<Rollout> rollout_group(const ScoreOutput& output, const SyntheticTask& task,
                                   const BudgetSpec& budget, int group_size, SeededRng& rng);

RewardMode effective_reward_mode(const SyntheticTask& task, const GrpoConfig& config);

// Fills r_task and reward for every rollout in the group.
void fill_group_rewards(std::vector<Rollout>& group, RewardMode mode, double loss_ref,
                        const BudgetSpec& budget, const GrpoConfig& config);

// Fills advantage for every rollout from the rewards already present.
void fill_group_advantages(std::vector<Rollout>& group);

struct GrpoStepStats {
  double objective = 0.0;   // clipped surrogate minus the KL penalty
  double surrogate = 0.0;
  double kl_mean = 0.0;      // mean per-token KL(current || reference)
  double clip_fraction = 0.0;
};

// Clipped-surrogate objective over one rollout group, maximizing
//   J = mean_j min(rho_j * A_j, clip(rho_j, 1 - eps, 1 + eps) * A_j)
//       - kl_coeff * mean_t KL(Bern(p_t) || Bern(p_ref_t))
// with rho_j = exp(log_prob_current - log_prob_old). Re-scores the task under
// `params` (refreshing log_prob_current) and, when grad_out is non-null,
// writes dJ/dparams in flatten() order; callers descend on its negation.
GrpoStepStats grpo_loss_and_grad(const ScorerParams& params, const ScorerParams& ref_params,
                                 const SyntheticTask& task, const BudgetSpec& budget,
                                 std::vector<Rollout>& group, const GrpoConfig& config,
                                 const ScorerOptions& options = {}, Vec* grad_out = nullptr);

// Monte Carlo score-function estimate of the per-token reward gradient,
//   g_t = (1/G) sum_j (R_j - mean R) * (a_jt - p_t),
// from raw rewards. This is the quantity GRPO's surrogate reduces to when
// clipping is inactive and the policies coincide; exposed for diagnostics.
Vec token_gradient_estimate(const ScoreOutput& output, const std::vector<Rollout>& group);

struct GrpoIterLog {
  int iteration = 0;
  double reward_mean = 0.0;
  double reward_min = 0.0;
  double reward_max = 0.0;
  double kl_mean = 0.0;
  double clip_fraction = 0.0;
  double t_eq_mean = 0.0;
  double accuracy = 0.0;   // fraction of sampled masks that solved their task
  double objective = 0.0;
  double grad_norm = 0.0;  // before clipping
};

struct GrpoResult {
  ScorerParams params;
  std::vector<GrpoIterLog> log;
};

// Group-relative policy optimization against a frozen copy of `initial` as
// the KL reference. Tasks are visited round-robin in batches; the sampling
// policy is refreshed every iteration, so ratios sit at 1 when gradients are
// taken and the clip only guards the update direction. Open-ended loss
// references come from the reference policy's top-k mask per task, cached up
// front. Non-finite losses or gradients abort with diagnostics.
GrpoResult train_grpo(const std::vector<SyntheticTask>& tasks, const GrpoConfig& config,
                      const ScorerParams& initial, const BudgetSpec& base_budget,
                      const ScorerOptions& options = {});

}  // namespace grip
