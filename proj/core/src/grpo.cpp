#include "grip/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "grip/numeric.hpp"

namespace grip {
namespace {

constexpr double kGradClip = 5.0;
constexpr double kStdFloor = 1e-12;

double bernoulli_kl(double p, double q) {
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

int topk_count(const BudgetSpec& budget, int n) {
  long long k = std::llround(budget.rho_target * n);
  return static_cast<int>(std::clamp(k, 1LL, static_cast<long long>(n)));
}

}  // namespace

double rollout_equivalent_tokens(const BudgetSpec& budget, int kept) {
  budget.validate();
  require(kept >= 0 && kept <= budget.n0, "rollout_equivalent_tokens: kept out of range");
  std::vector<int> per_stage(budget.stage_layers.size());
  per_stage[0] = kept;
  for (size_t i = 1; i < per_stage.size(); ++i) {
    int nominal = static_cast<int>(std::llround(budget.stage_keep_ratios[i] * budget.n0));
    per_stage[i] = std::min(kept, std::max(nominal, 0));
  }
  return realized_equivalent_tokens(budget, per_stage);
}

double task_reward(const TaskOutcome& outcome, RewardMode mode, double loss_ref,
                   double reward_scale) {
  if (mode == RewardMode::verifiable) return outcome.correct ? 1.0 : 0.0;
  return 1.0 - sigmoid(reward_scale * (outcome.loss - loss_ref));
}

double trajectory_reward(double r_task, double t_eq_realized, double t_target,
                         double budget_penalty) {
  return r_task - budget_penalty * std::max(0.0, t_eq_realized - t_target);
}

Vec group_advantages(const Vec& rewards) {
  require(!rewards.empty(), "group_advantages: empty group");
  const double n = static_cast<double>(rewards.size());
  double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  double stdev = std::sqrt(var / n);
  Vec adv(rewards.size(), 0.0);
  if (stdev < kStdFloor) return adv;
  for (size_t j = 0; j < rewards.size(); ++j) adv[j] = (rewards[j] - mean) / stdev;
  return adv;
}

std::vector<Rollout> rollout_group(const ScoreOutput& output, const SyntheticTask& task,
                                   const BudgetSpec& budget, int group_size, SeededRng& rng) {
  require(group_size >= 1, "rollout_group: group_size must be positive");
  require(static_cast<int>(output.probs.size()) == task.grid.tokens(),
          "rollout_group: score output does not match the task grid");
  std::vector<Rollout> group;
  group.reserve(group_size);
  for (int j = 0; j < group_size; ++j) {
    SampleResult sample = sample_bernoulli(output, rng);
    TaskOutcome outcome = evaluate(task, sample.mask);
    Rollout r;
    r.mask = sample.mask;
    r.log_prob_old = sample.log_prob;
    r.log_prob_current = sample.log_prob;
    r.loss = outcome.loss;
    r.correct = outcome.correct;
    r.forced_keep = sample.forced_keep;
    r.t_eq_realized = rollout_equivalent_tokens(budget, r.mask.kept);
    group.push_back(std::move(r));
  }
  return group;
}

RewardMode effective_reward_mode(const SyntheticTask& task, const GrpoConfig& config) {
  if (config.disable_hybrid_reward) return RewardMode::open_ended;
  return task.oracle.task_mode == TaskMode::verifiable ? RewardMode::verifiable
                                                       : RewardMode::open_ended;
}

void fill_group_rewards(std::vector<Rollout>& group, RewardMode mode, double loss_ref,
                        const BudgetSpec& budget, const GrpoConfig& config) {
  for (Rollout& r : group) {
    TaskOutcome o;
    o.correct = r.correct;
    o.loss = r.loss;
    r.r_task = task_reward(o, mode, loss_ref, config.reward_scale);
    r.reward = trajectory_reward(r.r_task, r.t_eq_realized, budget.t_target,
                                 config.budget_penalty);
  }
}

void fill_group_advantages(std::vector<Rollout>& group) {
  Vec rewards(group.size());
  for (size_t j = 0; j < group.size(); ++j) rewards[j] = group[j].reward;
  Vec adv = group_advantages(rewards);
  for (size_t j = 0; j < group.size(); ++j) group[j].advantage = adv[j];
}

GrpoStepStats grpo_loss_and_grad(const ScorerParams& params, const ScorerParams& ref_params,
                                 const SyntheticTask& task, const BudgetSpec& budget,
                                 std::vector<Rollout>& group, const GrpoConfig& config,
                                 const ScorerOptions& options, Vec* grad_out) {
  require(!group.empty(), "grpo_loss_and_grad: empty rollout group");
  require(config.clip_eps > 0.0, "grpo_loss_and_grad: clip_eps must be positive");
  const int n = task.grid.tokens();
  const RetentionMask all = RetentionMask::ones(n);

  ScoreTrace trace;
  ScoreOutput out = score(params, task.grid, all, budget, options,
                          grad_out != nullptr ? &trace : nullptr);
  ScoreOutput ref_out = score(ref_params, task.grid, all, budget, options);

  const double group_n = static_cast<double>(group.size());
  GrpoStepStats stats;
  Vec d_obj_ds(n, 0.0);

  for (Rollout& r : group) {
    require(r.mask.size() == n, "grpo_loss_and_grad: rollout mask size mismatch");
    r.log_prob_current = mask_log_prob(out, r.mask);
    double ratio = std::exp(r.log_prob_current - r.log_prob_old);
    double clipped_ratio = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
    double unclipped = ratio * r.advantage;
    double clipped = clipped_ratio * r.advantage;
    stats.surrogate += std::min(unclipped, clipped) / group_n;
    if (ratio < 1.0 - config.clip_eps || ratio > 1.0 + config.clip_eps)
      stats.clip_fraction += 1.0 / group_n;
    if (unclipped <= clipped) {
      // The min tracks the unclipped branch; d rho / d s_t = rho * (a_t - p_t).
      double coeff = ratio * r.advantage / group_n;
      for (int t = 0; t < n; ++t) {
        double a = r.mask.get(t) ? 1.0 : 0.0;
        d_obj_ds[t] += coeff * (a - out.probs[t]);
      }
    }
  }

  for (int t = 0; t < n; ++t) {
    double p = out.probs[t];
    double q = ref_out.probs[t];
    stats.kl_mean += bernoulli_kl(p, q) / n;
    double dkl_dp = std::log(p / (1.0 - p)) - std::log(q / (1.0 - q));
    d_obj_ds[t] -= config.kl_coeff * dkl_dp * p * (1.0 - p) / n;
  }
  stats.objective = stats.surrogate - config.kl_coeff * stats.kl_mean;
  require(std::isfinite(stats.objective), "grpo_loss_and_grad: non-finite objective");

  if (grad_out != nullptr) {
    *grad_out = score_backward(params, task.grid, trace, d_obj_ds, options);
    for (double g : *grad_out)
      require(std::isfinite(g), "grpo_loss_and_grad: non-finite gradient");
  }
  return stats;
}

Vec token_gradient_estimate(const ScoreOutput& output, const std::vector<Rollout>& group) {
  require(!group.empty(), "token_gradient_estimate: empty rollout group");
  const int n = static_cast<int>(output.probs.size());
  const double group_n = static_cast<double>(group.size());
  double mean_reward = 0.0;
  for (const Rollout& r : group) mean_reward += r.reward / group_n;
  Vec grad(n, 0.0);
  for (const Rollout& r : group) {
    require(r.mask.size() == n, "token_gradient_estimate: mask size mismatch");
    double centered = r.reward - mean_reward;
    for (int t = 0; t < n; ++t) {
      double a = r.mask.get(t) ? 1.0 : 0.0;
      grad[t] += centered * (a - output.probs[t]) / group_n;
    }
  }
  return grad;
}

GrpoResult train_grpo(const std::vector<SyntheticTask>& tasks, const GrpoConfig& config,
                      const ScorerParams& initial, const BudgetSpec& base_budget,
                      const ScorerOptions& options) {
  require(!tasks.empty(), "train_grpo: no tasks");
  require(config.iterations >= 0, "train_grpo: iterations must be non-negative");
  require(config.group_size >= 2, "train_grpo: group_size must be at least 2");
  require(config.batch_tasks >= 1, "train_grpo: batch_tasks must be positive");
  base_budget.validate();

  GrpoResult result;
  result.params = initial;
  if (config.iterations == 0) return result;

  const ScorerParams& ref = initial;

  // Loss references for loss-based rewards: the reference policy's top-k mask
  // per task, evaluated once.
  std::vector<double> loss_ref(tasks.size(), 0.0);
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (effective_reward_mode(tasks[i], config) != RewardMode::open_ended) continue;
    const int n = tasks[i].grid.tokens();
    ScoreOutput ref_out = score(ref, tasks[i].grid, RetentionMask::ones(n), base_budget, options);
    RetentionMask ref_mask = select_topk(ref_out, topk_count(base_budget, n));
    loss_ref[i] = evaluate(tasks[i], ref_mask).loss;
  }

  AdamState adam = AdamState::init(result.params.param_count(), config.learning_rate);
  SeededRng master(config.seed);
  result.log.reserve(config.iterations);

  for (int it = 0; it < config.iterations; ++it) {
    SeededRng iter_rng = master.split("iteration").split(static_cast<uint64_t>(it));
    Vec grad_sum(result.params.param_count(), 0.0);
    GrpoIterLog log;
    log.iteration = it;
    log.reward_min = std::numeric_limits<double>::infinity();
    log.reward_max = -std::numeric_limits<double>::infinity();
    int total_rollouts = 0;
    int correct_rollouts = 0;

    for (int b = 0; b < config.batch_tasks; ++b) {
      size_t task_idx = (static_cast<size_t>(it) * config.batch_tasks + b) % tasks.size();
      const SyntheticTask& task = tasks[task_idx];
      const int n = task.grid.tokens();

      ScoreOutput out = score(result.params, task.grid, RetentionMask::ones(n), base_budget,
                              options);
      SeededRng roll_rng = iter_rng.split("rollouts").split(static_cast<uint64_t>(b));
      std::vector<Rollout> group =
          rollout_group(out, task, base_budget, config.group_size, roll_rng);
      fill_group_rewards(group, effective_reward_mode(task, config), loss_ref[task_idx],
                         base_budget, config);
      fill_group_advantages(group);

      Vec grad;
      GrpoStepStats stats = grpo_loss_and_grad(result.params, ref, task, base_budget, group,
                                               config, options, &grad);
      for (size_t g = 0; g < grad_sum.size(); ++g) grad_sum[g] += grad[g];

      log.kl_mean += stats.kl_mean / config.batch_tasks;
      log.clip_fraction += stats.clip_fraction / config.batch_tasks;
      log.objective += stats.objective / config.batch_tasks;
      for (const Rollout& r : group) {
        log.reward_mean += r.reward;
        log.reward_min = std::min(log.reward_min, r.reward);
        log.reward_max = std::max(log.reward_max, r.reward);
        log.t_eq_mean += r.t_eq_realized;
        correct_rollouts += r.correct ? 1 : 0;
        ++total_rollouts;
      }
    }

    log.reward_mean /= total_rollouts;
    log.t_eq_mean /= total_rollouts;
    log.accuracy = static_cast<double>(correct_rollouts) / total_rollouts;

    // Ascend on the objective: Adam minimizes, so feed the negated gradient.
    Vec step(grad_sum.size());
    for (size_t g = 0; g < grad_sum.size(); ++g) step[g] = -grad_sum[g] / config.batch_tasks;
    log.grad_norm = clip_global_norm(step, kGradClip);
    if (!std::isfinite(log.grad_norm)) {
      std::ostringstream msg;
      msg << "train_grpo: non-finite gradient at iteration " << it;
      fail(msg.str());
    }
    Vec flat = result.params.flatten();
    adam_step(flat, step, adam);
    result.params.unflatten(flat);

    result.log.push_back(log);
  }
  return result;
}

}  // namespace grip
