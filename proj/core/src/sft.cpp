#include "grip/sft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace grip {

namespace {

constexpr double kGradClip = 5.0;

// signal as a multilinear function of soft keep variables z in [0,1]:
//   sum_i z_i w_i - cliff * sum_c (1 - z_c) + sum_p bonus_p (1-z_a)(1-z_b)
double soft_signal(const OracleSpec& o, const Vec& z) {
  double s = 0.0;
  for (size_t i = 0; i < z.size(); ++i) s += z[i] * o.importance_weights[i];
  double cliff = 4.0 * o.decision_threshold;
  for (int c : o.critical_set) s -= cliff * (1.0 - z[c]);
  for (const auto& p : o.misleading_pairs) s += p.bonus * (1.0 - z[p.a]) * (1.0 - z[p.b]);
  return s;
}

// d signal / d z_i of the multilinear form above.
Vec soft_signal_grad(const OracleSpec& o, const Vec& z) {
  Vec g(z.size());
  for (size_t i = 0; i < z.size(); ++i) g[i] = o.importance_weights[i];
  double cliff = 4.0 * o.decision_threshold;
  for (int c : o.critical_set) g[c] += cliff;
  for (const auto& p : o.misleading_pairs) {
    g[p.a] -= p.bonus * (1.0 - z[p.b]);
    g[p.b] -= p.bonus * (1.0 - z[p.a]);
  }
  return g;
}

// Rebuild the oracle's logit vector from an arbitrary (possibly fractional)
// signal value, mirroring evaluate().
Vec logits_from_signal(const SyntheticTask& task, double signal) {
  const OracleSpec& o = task.oracle;
  double tau = o.decision_threshold;
  double scale = 4.0 / tau;
  double total_mass =
      std::accumulate(o.importance_weights.begin(), o.importance_weights.end(), 0.0);
  double bonus_total = 0.0;
  for (const auto& p : o.misleading_pairs) bonus_total += std::abs(p.bonus);
  double cap =
      scale * (tau + 4.0 * tau * o.critical_set.size() + bonus_total + total_mass) + 1.0;
  Vec logits(o.num_classes);
  for (int k = 0; k < o.num_classes; ++k) logits[k] = -cap * (1.0 + 0.1 * k);
  int anti = (task.label + 1) % o.num_classes;
  logits[task.label] = scale * (signal - tau);
  logits[anti] = -scale * (signal - tau);
  return logits;
}

}  // namespace

double sft_set_level_loss(const RetentionMask& mask, const Vec& probs, int reward) {
  require(mask.size() == static_cast<int>(probs.size()),
          "sft_set_level_loss: size mismatch");
  require(reward == 0 || reward == 1, "sft_set_level_loss: reward must be 0 or 1");
  double loss = 0.0;
  for (int i = 0; i < mask.size(); ++i) {
    double p = probs[i];
    require(p > 0.0 && p < 1.0, "sft_set_level_loss: probs must be in (0,1)");
    if (reward == 1 && mask.get(i)) loss -= std::log(p);
    if (reward == 0 && !mask.get(i)) loss -= std::log1p(-p);
  }
  return loss;
}

SftLossBreakdown distill_losses(const TaskOutcome& student_outcome,
                                const Vec& student_pooled, const TeacherOutput& teacher,
                                const Vec& probs, double target_keep_ratio,
                                const SftConfig& config) {
  require(student_pooled.size() == teacher.pooled_feature.size(),
          "distill_losses: pooled feature dims differ");
  require(student_outcome.logits.size() == teacher.logits.size(),
          "distill_losses: logit dims differ");
  require(!probs.empty(), "distill_losses: empty probs");

  SftLossBreakdown out;
  for (size_t k = 0; k < student_pooled.size(); ++k) {
    double d = student_pooled[k] - teacher.pooled_feature[k];
    out.l_distill += d * d;
  }
  out.l_distill /= static_cast<double>(student_pooled.size());
  out.l_kl = kl_from_logits(teacher.logits, student_outcome.logits);
  double mean_p = std::accumulate(probs.begin(), probs.end(), 0.0) / probs.size();
  double gap = mean_p - target_keep_ratio;
  out.l_ratio = gap * gap;
  out.total = out.l_distill + config.alpha_kl * out.l_kl + config.beta_ratio * out.l_ratio;
  return out;
}

CurriculumPoint curriculum_target(const SftConfig& config, int epoch,
                                  const BudgetSpec& base) {
  require(!config.curriculum.empty(), "curriculum_target: empty curriculum");
  require(epoch >= 0, "curriculum_target: negative epoch");
  base.validate();
  double prev = -1.0;
  int prev_epoch = -1;
  for (const auto& [e, t] : config.curriculum) {
    require(e > prev_epoch, "curriculum_target: epochs must strictly increase");
    require(prev < 0.0 || t <= prev, "curriculum_target: targets must be non-increasing");
    prev_epoch = e;
    prev = t;
  }
  require(config.curriculum.front().first == 0,
          "curriculum_target: first entry must cover epoch 0");

  double target = config.curriculum.front().second;
  for (const auto& [e, t] : config.curriculum)
    if (epoch >= e) target = t;

  double base_teq = equivalent_tokens(base);
  require(target > 0.0 && target <= base_teq + 1e-9,
          "curriculum_target: target must lie in (0, base T_eq]");
  double scale = target / base_teq;

  CurriculumPoint point;
  point.t_eq = target;
  point.budget = base;
  for (double& r : point.budget.stage_keep_ratios) r = std::min(1.0, r * scale);
  point.budget.rho_target = std::min(1.0, base.rho_target * scale);
  point.budget.t_target = target;
  point.budget.validate();
  return point;
}

SftLossBreakdown sft_sample_losses(const ScorerParams& params, const SyntheticTask& task,
                                   const BudgetSpec& budget, const SftConfig& config,
                                   const ScorerOptions& options, bool hard_selection,
                                   Vec* flat_grad, bool* correct_out) {
  int n = task.grid.tokens();
  ScoreTrace trace;
  ScoreOutput out = score(params, task.grid, RetentionMask::ones(n), budget, options,
                          flat_grad ? &trace : nullptr);

  double rho = budget.rho_target;
  int k = std::clamp(static_cast<int>(std::llround(rho * n)), 1, n);

  // Soft keep weights: the hard path uses the selected bits (straight-through
  // backward swaps in dp), the soft path uses the probabilities themselves.
  RetentionMask mask = select_topk(out, k);
  Vec z(n);
  for (int i = 0; i < n; ++i)
    z[i] = hard_selection ? (mask.get(i) ? 1.0 : 0.0) : out.probs[i];

  double z_sum = std::accumulate(z.begin(), z.end(), 0.0);
  require(z_sum > 0.0, "sft_sample_losses: degenerate keep weights");
  int d = task.grid.feature_dim;
  Vec pooled(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) pooled[c] += z[i] * task.grid.features[i][c];
  for (double& v : pooled) v /= z_sum;

  double signal = soft_signal(task.oracle, z);
  Vec logits = logits_from_signal(task, signal);
  TaskOutcome outcome;
  outcome.logits = logits;
  outcome.predicted = 0;
  for (size_t c = 1; c < logits.size(); ++c)
    if (logits[c] > logits[outcome.predicted]) outcome.predicted = static_cast<int>(c);
  outcome.correct = outcome.predicted == task.label;
  outcome.loss = cross_entropy(logits, task.label);

  TeacherOutput teacher = teacher_evaluate(task);
  SftLossBreakdown losses =
      distill_losses(outcome, pooled, teacher, out.probs, rho, config);
  if (correct_out) {
    // Report the hard decision even on the soft path: accuracy is always a
    // statement about the discrete mask.
    *correct_out = evaluate(task, mask).correct;
  }
  if (!flat_grad) return losses;

  // dL/dp_i, assembled from the three components, then mapped through
  // dp/ds = p(1-p) into score-space for the backward pass.
  Vec dz(n, 0.0);

  double inv_d = 1.0 / d;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
      double dl_dpool = 2.0 * inv_d * (pooled[c] - teacher.pooled_feature[c]);
      acc += dl_dpool * (task.grid.features[i][c] - pooled[c]);
    }
    dz[i] += acc / z_sum;
  }

  Vec soft_probs = softmax(logits);
  Vec teacher_probs = softmax(teacher.logits);
  double scale = 4.0 / task.oracle.decision_threshold;
  int anti = (task.label + 1) % task.oracle.num_classes;
  double dkl_dsignal = scale * ((soft_probs[task.label] - teacher_probs[task.label]) -
                                (soft_probs[anti] - teacher_probs[anti]));
  Vec dsig = soft_signal_grad(task.oracle, z);
  for (int i = 0; i < n; ++i) dz[i] += config.alpha_kl * dkl_dsignal * dsig[i];

  double mean_p = std::accumulate(out.probs.begin(), out.probs.end(), 0.0) / n;
  double dratio_dp = config.beta_ratio * 2.0 * (mean_p - rho) / n;

  Vec ds(n);
  for (int i = 0; i < n; ++i) {
    double p = out.probs[i];
    ds[i] = (dz[i] + dratio_dp) * p * (1.0 - p);
  }
  Vec grad = score_backward(params, task.grid, trace, ds, options);
  if (flat_grad->empty()) flat_grad->assign(grad.size(), 0.0);
  require(flat_grad->size() == grad.size(), "sft_sample_losses: gradient size mismatch");
  for (size_t i = 0; i < grad.size(); ++i) (*flat_grad)[i] += grad[i];
  return losses;
}

SftResult train_sft(const std::vector<SyntheticTask>& tasks, const SftConfig& config,
                    const ScorerParams& initial, const BudgetSpec& base_budget,
                    const ScorerOptions& options) {
  require(!tasks.empty(), "train_sft: no tasks");
  require(config.epochs >= 0, "train_sft: negative epochs");
  require(config.batch_size >= 1, "train_sft: batch_size must be >= 1");
  base_budget.validate();

  SftResult result;
  result.params = initial;
  if (config.epochs == 0) return result;

  AdamState adam = AdamState::init(result.params.param_count(), config.learning_rate);
  SeededRng rng(config.seed);
  int n_tasks = static_cast<int>(tasks.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    CurriculumPoint point = curriculum_target(config, epoch, base_budget);

    std::vector<int> order(n_tasks);
    std::iota(order.begin(), order.end(), 0);
    SeededRng shuffle_rng = rng.split("epoch-shuffle").split(epoch);
    for (int i = n_tasks - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.below(static_cast<uint64_t>(i) + 1)]);

    SftEpochLog log;
    log.epoch = epoch;
    log.t_eq_target = point.t_eq;
    int correct_count = 0;

    for (int start = 0; start < n_tasks; start += config.batch_size) {
      int end = std::min(n_tasks, start + config.batch_size);
      Vec grad(result.params.param_count(), 0.0);
      for (int b = start; b < end; ++b) {
        bool correct = false;
        SftLossBreakdown l =
            sft_sample_losses(result.params, tasks[order[b]], point.budget, config,
                              options, /*hard_selection=*/true, &grad, &correct);
        if (!std::isfinite(l.total))
          fail("train_sft: non-finite loss at epoch " + std::to_string(epoch) +
               ", task index " + std::to_string(order[b]));
        log.l_distill += l.l_distill;
        log.l_kl += l.l_kl;
        log.l_ratio += l.l_ratio;
        log.total += l.total;
        if (correct) ++correct_count;
      }
      double inv = 1.0 / (end - start);
      for (double& g : grad) g *= inv;
      clip_global_norm(grad, kGradClip);
      Vec flat = result.params.flatten();
      adam_step(flat, grad, adam);
      result.params.unflatten(flat);
    }

    log.l_distill /= n_tasks;
    log.l_kl /= n_tasks;
    log.l_ratio /= n_tasks;
    log.total /= n_tasks;
    log.mean_accuracy = static_cast<double>(correct_count) / n_tasks;
    result.log.push_back(log);
  }
  return result;
}

}  // namespace grip
