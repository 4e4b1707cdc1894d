// Acceptance gate: one [PASS]/[FAIL] line per criterion, nonzero exit on any
// failure. Criteria 5-7 share one frozen training run; everything else is
// self-contained. Runtimes are printed so budget regressions are visible.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "grip/analysis.hpp"
#include "grip/checkpoint.hpp"
#include "grip/credit.hpp"
#include "grip/environment.hpp"
#include "grip/grpo.hpp"
#include "grip/numeric.hpp"
#include "grip/scorer.hpp"
#include "grip/sft.hpp"

namespace fs = std::filesystem;
using namespace grip;

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Gate {
  int failures = 0;

  void run(int number, const std::string& name, const std::function<std::string()>& body) {
    double start = now_s();
    std::string detail;
    bool ok = true;
    try {
      detail = body();
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    double elapsed = now_s() - start;
    std::printf("[%s] criterion %d: %s (%s; %.1fs)\n", ok ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

// body() helpers signal failure by throwing; check() is the single funnel so
// every failed comparison reports its values.
void check(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: gradient correctness

GradFn scorer_fd_fn(const TokenGrid& grid, const BudgetSpec& budget, const Vec& weights,
                    const ScorerParams& proto) {
  return [=](const Vec& flat, Vec* grad_out) {
    ScorerParams params = proto;
    params.unflatten(flat);
    ScoreTrace trace;
    ScoreOutput out = score(params, grid, RetentionMask::ones(grid.tokens()), budget, {}, &trace);
    double loss = 0.0;
    for (size_t t = 0; t < weights.size(); ++t) loss += weights[t] * out.s_final[t];
    if (grad_out) *grad_out = score_backward(params, grid, trace, weights);
    return loss;
  };
}

GradFn sft_fd_fn(const SyntheticTask& task, const BudgetSpec& budget, const SftConfig& config,
                 const ScorerParams& proto) {
  return [=](const Vec& flat, Vec* grad_out) {
    ScorerParams params = proto;
    params.unflatten(flat);
    Vec grad(params.param_count(), 0.0);
    SftLossBreakdown b = sft_sample_losses(params, task, budget, config, {},
                                           /*hard_selection=*/false,
                                           grad_out ? &grad : nullptr, nullptr);
    if (grad_out) *grad_out = grad;
    return b.total;
  };
}

struct FrozenGroup {
  SyntheticTask task;
  BudgetSpec budget;
  ScorerParams params;
  std::vector<Rollout> group;
};

FrozenGroup make_frozen_group(uint64_t seed) {
  FrozenGroup fx;
  fx.task = generate_task(Level::LV2, 4, 4, 8, 2000 + seed);
  const int n = fx.task.grid.tokens();
  fx.budget = BudgetSpec::single_stage(n, 0.5);
  SeededRng rng(seed);
  fx.params = ScorerParams::init(8, 6, rng);
  ScoreOutput out = score(fx.params, fx.task.grid, RetentionMask::ones(n), fx.budget);
  SeededRng roll = rng.split("rollouts");
  fx.group = rollout_group(out, fx.task, fx.budget, 8, roll);
  GrpoConfig config;
  fill_group_rewards(fx.group, RewardMode::verifiable, 0.0, fx.budget, config);
  fill_group_advantages(fx.group);
  return fx;
}

GradFn grpo_fd_fn(const FrozenGroup& fx, const ScorerParams& ref, const GrpoConfig& config) {
  return [=](const Vec& flat, Vec* grad_out) {
    ScorerParams params = fx.params;
    params.unflatten(flat);
    std::vector<Rollout> group = fx.group;
    Vec grad;
    GrpoStepStats stats = grpo_loss_and_grad(params, ref, fx.task, fx.budget, group, config, {},
                                             grad_out ? &grad : nullptr);
    if (grad_out) *grad_out = grad;
    return stats.objective;
  };
}

std::string criterion_gradients() {
  double worst_scorer = 0.0, worst_sft = 0.0, worst_grpo = 0.0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    TokenGrid grid = generate_task(Level::LV2, 2, 3, 4, 100 + seed).grid;
    SeededRng prng(seed);
    ScorerParams proto = ScorerParams::init(4, 5, prng);
    BudgetSpec budget = BudgetSpec::single_stage(6, 0.4);
    SeededRng wrng(seed * 13);
    Vec weights(6);
    for (double& w : weights) w = wrng.uniform(-1.0, 1.0);
    worst_scorer = std::max(
        worst_scorer,
        finite_diff_check(scorer_fd_fn(grid, budget, weights, proto), proto.flatten(), 1e-5));
  }
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticTask task = generate_task(Level::LV2, 4, 4, 8, 600 + seed);
    BudgetSpec budget = BudgetSpec::single_stage(16, 0.5);
    SeededRng prng(seed);
    ScorerParams proto = ScorerParams::init(8, 6, prng);
    SftConfig config;
    worst_sft = std::max(worst_sft, finite_diff_check(sft_fd_fn(task, budget, config, proto),
                                                      proto.flatten(), 1e-5));
  }
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    FrozenGroup fx = make_frozen_group(seed);
    SeededRng ref_rng(seed + 100);
    ScorerParams ref = ScorerParams::init(8, 6, ref_rng);
    GrpoConfig config;
    // The surrogate sits near O(1) while many gradient components are tiny;
    // the error curve is roundoff-dominated below this step, so a larger
    // probe is the numerically conditioned choice, not a looser one.
    worst_grpo = std::max(
        worst_grpo, finite_diff_check(grpo_fd_fn(fx, ref, config), fx.params.flatten(), 1e-4));
  }
  check(worst_scorer < 1e-4, "scorer fd error " + fmt(worst_scorer));
  check(worst_sft < 1e-4, "sft fd error " + fmt(worst_sft));
  check(worst_grpo < 1e-4, "grpo fd error " + fmt(worst_grpo));
  return "max rel err: scorer " + fmt(worst_scorer) + ", sft " + fmt(worst_sft) + ", grpo " +
         fmt(worst_grpo);
}

// ---------------------------------------------------------------------------
// criterion 2: exact identities

std::string criterion_identities() {
  const double tol = 1e-9;

  Vec adv = group_advantages({1.2, -0.7, 3.4, 0.0, 2.2});
  double mean = 0.0;
  for (double a : adv) mean += a / adv.size();
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean) / adv.size();
  check(std::abs(mean) <= tol, "advantage mean " + fmt(mean));
  check(std::abs(std::sqrt(var) - 1.0) <= tol, "advantage std " + fmt(std::sqrt(var)));

  check(std::abs(trajectory_reward(0.83, 100.0, 100.0, 0.005) - 0.83) <= tol,
        "hinge at the boundary");
  check(std::abs(trajectory_reward(0.83, 64.0, 100.0, 0.005) - 0.83) <= tol,
        "hinge under budget");

  TaskOutcome anchored;
  anchored.logits = {0.0, 0.0};
  anchored.loss = 0.7;
  check(std::abs(task_reward(anchored, RewardMode::open_ended, 0.7, 3.0) - 0.5) <= tol,
        "reward anchor at the reference loss");

  // FiLM identity: zeroing the affine head's output layer must reproduce the
  // unmodulated features exactly.
  SyntheticTask film_task = generate_task(Level::LV2, 2, 3, 4, 12);
  SeededRng frng(5);
  ScorerParams fparams = ScorerParams::init(4, 5, frng);
  std::fill(fparams.layers[3].w.data.begin(), fparams.layers[3].w.data.end(), 0.0);
  std::fill(fparams.layers[3].b.begin(), fparams.layers[3].b.end(), 0.0);
  BudgetSpec fbudget = BudgetSpec::single_stage(6, 0.3);
  ScoreTrace ftrace;
  ScoreOutput fout = score(fparams, film_task.grid, RetentionMask::ones(6), fbudget, {}, &ftrace);
  for (double g : fout.film_gamma) check(g == 0.0, "film gamma nonzero");
  for (double b : fout.film_beta) check(b == 0.0, "film beta nonzero");
  for (int t = 0; t < 6; ++t)
    check(ftrace.f_tilde[t] == ftrace.f_local[t], "film identity broke at token " +
                                                      std::to_string(t));

  // Gated fusion stays inside the hull of its two inputs and matches the
  // convex blend exactly.
  SyntheticTask fuse_task = generate_task(Level::LV3, 3, 3, 4, 11);
  SeededRng grng(7);
  ScorerParams gparams = ScorerParams::init(4, 6, grng);
  BudgetSpec gbudget = BudgetSpec::single_stage(9, 0.4);
  ScoreTrace gtrace;
  ScoreOutput gout = score(gparams, fuse_task.grid, RetentionMask::ones(9), gbudget, {}, &gtrace);
  for (int t = 0; t < 9; ++t) {
    double lo = std::min(gout.s_ours[t], gtrace.heuristic_z[t]);
    double hi = std::max(gout.s_ours[t], gtrace.heuristic_z[t]);
    check(gout.s_final[t] >= lo - tol && gout.s_final[t] <= hi + tol,
          "fused score left the convex hull at token " + std::to_string(t));
    double blend = gout.alpha_gate[t] * gout.s_ours[t] +
                   (1.0 - gout.alpha_gate[t]) * gtrace.heuristic_z[t];
    check(std::abs(gout.s_final[t] - blend) <= tol, "fusion blend identity");
  }

  BudgetSpec worked;
  worked.n0 = 64;
  worked.stage_layers = {3, 5};
  worked.stage_keep_ratios = {0.5, 0.25};
  worked.rho_target = 0.25;
  check(std::abs(equivalent_tokens(worked) - 176.0) <= tol,
        "equivalent tokens " + fmt(equivalent_tokens(worked)));

  return "advantages, hinge, anchor, film, fusion hull, worked budget all within 1e-9";
}

// ---------------------------------------------------------------------------
// criterion 3: oracle equivalence

std::string criterion_oracle() {
  const int instances = 50;
  SeededRng rng(99);
  int pairs_checked = 0;
  for (int i = 0; i < instances; ++i) {
    SyntheticTask task = generate_task(Level::LV3, 4, 4, 8, 7000 + i);
    const int n = task.grid.tokens();
    check(n <= 16, "instance too large");

    // Pair XOR: from full retention, dropping either member alone breaks the
    // task and dropping both restores it.
    for (const MisleadingPair& p : task.oracle.misleading_pairs) {
      RetentionMask m = RetentionMask::ones(n);
      m.set(p.a, false);
      check(!evaluate(task, m).correct, "single drop a stayed correct");
      m.set(p.a, true);
      m.set(p.b, false);
      check(!evaluate(task, m).correct, "single drop b stayed correct");
      m.set(p.a, false);
      check(evaluate(task, m).correct, "double drop stayed incorrect");
      ++pairs_checked;
    }

    const int max_kept = n / 2;
    RetentionMask best = brute_force_optimal(task, max_kept);
    check(best.kept >= 1 && best.kept <= max_kept, "brute force infeasible mask");
    double best_loss = evaluate(task, best).loss;
    SeededRng task_rng = rng.split(static_cast<uint64_t>(i));
    for (int trial = 0; trial < 10000; ++trial) {
      int kept = 1 + static_cast<int>(task_rng.below(max_kept));
      RetentionMask m = RetentionMask::zeros(n);
      while (m.kept < kept) m.set(static_cast<int>(task_rng.below(n)), true);
      check(evaluate(task, m).loss >= best_loss - 1e-12,
            "random mask beat brute force on instance " + std::to_string(i));
    }
  }
  return std::to_string(instances) + " instances, " + std::to_string(pairs_checked) +
         " pairs, 10000 random masks each";
}

// ---------------------------------------------------------------------------
// criterion 4: credit assignment

std::string criterion_credit() {
  CreditDemoReport rep = run_credit_demo(100000, 20260816);
  // Set-level gradients treat the two distractors and the culprit alike.
  double ga = rep.set_level_gradient[0];
  double gb = rep.set_level_gradient[1];
  double gc = rep.set_level_gradient[2];
  check(ga < 0.0 && gb < 0.0 && gc < 0.0, "set-level gradients not uniformly negative");

  auto z = [&](int t) {
    check(rep.mc_standard_error[t] > 0.0, "zero standard error");
    return rep.mc_estimate[t] / rep.mc_standard_error[t];
  };
  double za = z(0), zb = z(1), zc = z(2);
  check(zc < -5.0, "culprit z " + fmt(zc));
  check(std::abs(za) < 2.0, "distractor a z " + fmt(za));
  check(std::abs(zb) < 2.0, "distractor b z " + fmt(zb));
  return "set grads " + fmt(ga) + "/" + fmt(gb) + "/" + fmt(gc) + "; z = " + fmt(za) + "/" +
         fmt(zb) + "/" + fmt(zc);
}

// ---------------------------------------------------------------------------
// shared frozen training run for criteria 5-7

struct TrainedArtifacts {
  std::vector<SyntheticTask> suite;
  ScorerParams init;
  SftConfig sft_config;
  BudgetSpec sft_base;
  BudgetSpec rl_budget;
  GrpoConfig grpo_config;
  ScorerParams sl;
  ScorerParams rl;
  bool ready = false;
  std::string error;
};

TrainedArtifacts train_frozen() {
  TrainedArtifacts art;
  try {
    SuiteSpec spec;
    spec.count_lv1 = 100;
    spec.count_lv2 = 100;
    spec.count_lv3 = 100;
    spec.height = 8;
    spec.width = 8;
    spec.feature_dim = 8;
    spec.master_seed = 20260816;
    art.suite = generate_suite(spec);

    art.sft_base = BudgetSpec::single_stage(64, 1.0, 4);
    art.rl_budget = BudgetSpec::single_stage(64, 0.5, 4);

    art.sft_config.epochs = 30;
    art.sft_config.learning_rate = 0.01;
    art.sft_config.batch_size = 8;
    art.sft_config.seed = 11;
    art.sft_config.curriculum = {{0, 256.0}, {10, 192.0}, {20, 128.0}};

    SeededRng init_rng(1);
    art.init = ScorerParams::init(8, 16, init_rng);

    SftResult sft = train_sft(art.suite, art.sft_config, art.init, art.sft_base);
    art.sl = sft.params;

    art.grpo_config.group_size = 16;
    art.grpo_config.iterations = 4000;
    art.grpo_config.learning_rate = 0.003;
    art.grpo_config.kl_coeff = 0.01;
    art.grpo_config.batch_tasks = 4;
    art.grpo_config.seed = 12;

    GrpoResult rl = train_grpo(art.suite, art.grpo_config, art.sl, art.rl_budget);
    art.rl = rl.params;
    art.ready = true;
  } catch (const std::exception& e) {
    art.error = e.what();
  }
  return art;
}

std::string criterion_ordering(const TrainedArtifacts& art) {
  check(art.ready, "shared training failed: " + art.error);
  MethodComparison cmp = compare_methods(art.suite, art.sl, art.rl, 0.5);
  check(cmp.rows.size() == 3, "unexpected comparison shape");
  const MethodRow& heur = cmp.rows[0];
  const MethodRow& sl = cmp.rows[1];
  const MethodRow& rl = cmp.rows[2];

  double h1 = heur.by_level[0].accuracy(), s1 = sl.by_level[0].accuracy(),
         r1 = rl.by_level[0].accuracy();
  double spread = std::max({h1, s1, r1}) - std::min({h1, s1, r1});
  check(spread <= 0.03, "LV1 spread " + fmt(spread));

  double h2 = heur.by_level[1].accuracy(), s2 = sl.by_level[1].accuracy();
  check(s2 >= h2 + 0.05, "LV2: sl " + fmt(s2) + " vs heuristic " + fmt(h2));

  double s3 = sl.by_level[2].accuracy(), r3 = rl.by_level[2].accuracy();
  check(r3 >= s3 + 0.10, "LV3: rl " + fmt(r3) + " vs sl " + fmt(s3));

  return "LV1 spread " + fmt(spread) + "; LV2 sl " + fmt(s2) + " vs heur " + fmt(h2) +
         "; LV3 rl " + fmt(r3) + " vs sl " + fmt(s3);
}

// ---------------------------------------------------------------------------
// criterion 6: ablations

// Deployment-style accuracy: Bernoulli samples drawn at the requested budget
// count only when they both fit a 25% overage cap and answer correctly.
double sampled_accuracy(const ScorerParams& params, const std::vector<SyntheticTask>& suite,
                        double rho, const ScorerOptions& options) {
  SeededRng rng(99);
  double total = 0.0;
  for (const SyntheticTask& task : suite) {
    const int n = task.grid.tokens();
    BudgetSpec budget = BudgetSpec::single_stage(n, rho, 4);
    ScoreOutput out = score(params, task.grid, RetentionMask::ones(n), budget, options);
    const int cap = static_cast<int>(std::ceil(1.25 * rho * n));
    SeededRng task_rng = rng.split(task.seed);
    int good = 0;
    for (int s = 0; s < 4; ++s) {
      RetentionMask m = sample_bernoulli(out, task_rng).mask;
      if (m.kept <= cap && evaluate(task, m).correct) ++good;
    }
    total += good / 4.0;
  }
  return total / suite.size();
}

double topk_accuracy(const ScorerParams& params, const std::vector<SyntheticTask>& suite,
                     double rho) {
  SelectionPolicy policy = make_scorer_policy(params);
  int hits = 0;
  for (const SyntheticTask& task : suite) {
    const int n = task.grid.tokens();
    int k = std::clamp(static_cast<int>(std::llround(rho * n)), 1, n);
    if (evaluate(task, policy(task, k)).correct) ++hits;
  }
  return static_cast<double>(hits) / suite.size();
}

std::string criterion_ablations(const TrainedArtifacts& art) {
  check(art.ready, "shared training failed: " + art.error);

  // Budget modulator: train once (curriculum ends at keep ratio 0.5), then
  // compare the accuracy drop from the trained budget to half of it.
  ScorerOptions no_film;
  no_film.disable_film_modulator = true;
  SftResult ablated_sft =
      train_sft(art.suite, art.sft_config, art.init, art.sft_base, no_film);

  double full_at = sampled_accuracy(art.sl, art.suite, 0.5, {});
  double full_half = sampled_accuracy(art.sl, art.suite, 0.25, {});
  double abl_at = sampled_accuracy(ablated_sft.params, art.suite, 0.5, no_film);
  double abl_half = sampled_accuracy(ablated_sft.params, art.suite, 0.25, no_film);
  double full_drop = full_at - full_half;
  double abl_drop = abl_at - abl_half;
  check(abl_drop >= full_drop + 0.02, "modulator ablation drop " + fmt(abl_drop) +
                                          " vs full " + fmt(full_drop));

  // Hybrid reward: same SFT start, identical optimizer schedule, reward path
  // forced to the loss-shaped branch.
  GrpoConfig loss_only = art.grpo_config;
  loss_only.disable_hybrid_reward = true;
  GrpoResult ablated_rl = train_grpo(art.suite, loss_only, art.sl, art.rl_budget);

  double hybrid_acc = topk_accuracy(art.rl, art.suite, 0.5);
  double loss_only_acc = topk_accuracy(ablated_rl.params, art.suite, 0.5);
  check(hybrid_acc >= loss_only_acc + 0.02,
        "hybrid " + fmt(hybrid_acc) + " vs loss-only " + fmt(loss_only_acc));

  return "modulator drop " + fmt(abl_drop) + " vs " + fmt(full_drop) + "; reward " +
         fmt(hybrid_acc) + " vs " + fmt(loss_only_acc);
}

// ---------------------------------------------------------------------------
// criterion 7: granularity trend

std::string criterion_granularity(const TrainedArtifacts& art) {
  check(art.ready, "shared training failed: " + art.error);

  // Metric fixtures first; the trend means nothing if the instruments drift.
  auto mask_at = [](int n, std::initializer_list<int> idx) {
    RetentionMask m = RetentionMask::zeros(n);
    for (int i : idx) m.set(i, true);
    return m;
  };
  const double tol = 1e-12;
  check(std::abs(max_component_ratio(RetentionMask::ones(12), 3, 4) - 1.0) <= tol,
        "mcr full grid");
  check(std::abs(max_component_ratio(mask_at(16, {0, 15}), 4, 4) - 0.5) <= tol, "mcr corners");
  check(std::abs(max_component_ratio(mask_at(9, {0, 1, 8}), 3, 3) - 2.0 / 3.0) <= tol,
        "mcr two plus one");
  check(std::abs(max_component_ratio(mask_at(9, {0, 4}), 3, 3) - 0.5) <= tol, "mcr diagonal");
  check(std::abs(spatial_entropy(mask_at(16, {0, 1, 4, 5}), 4, 4, 2) - 0.0) <= tol,
        "entropy single cell");
  check(std::abs(spatial_entropy(RetentionMask::ones(64), 8, 8, 2) - std::log(4.0)) <= tol,
        "entropy uniform");
  check(std::abs(spatial_entropy(mask_at(16, {0, 1, 2, 8}), 4, 4, 2) - 1.0397207708399179) <=
            tol,
        "entropy 2/1/1/0");

  SelectionPolicy rl_policy = make_scorer_policy(art.rl);
  SelectionPolicy heuristic = make_heuristic_policy();
  double rl_mcr = 0.0, rl_ent = 0.0, h_mcr = 0.0, h_ent = 0.0;
  int count = 0;
  for (const SyntheticTask& task : art.suite) {
    if (task.difficulty == Level::LV1) continue;
    GranularityReport a = granularity_report(rl_policy(task, 32), 8, 8, 2);
    GranularityReport b = granularity_report(heuristic(task, 32), 8, 8, 2);
    rl_mcr += a.max_component_ratio;
    rl_ent += a.spatial_entropy;
    h_mcr += b.max_component_ratio;
    h_ent += b.spatial_entropy;
    ++count;
  }
  rl_mcr /= count;
  rl_ent /= count;
  h_mcr /= count;
  h_ent /= count;
  check(rl_mcr < h_mcr, "mcr: rl " + fmt(rl_mcr) + " vs heuristic " + fmt(h_mcr));
  check(rl_ent > h_ent, "entropy: rl " + fmt(rl_ent) + " vs heuristic " + fmt(h_ent));
  return "rl mcr " + fmt(rl_mcr) + " < " + fmt(h_mcr) + "; rl entropy " + fmt(rl_ent) + " > " +
         fmt(h_ent);
}

// ---------------------------------------------------------------------------
// criterion 8: difficulty classifier exactness

std::string criterion_classifier() {
  auto level_of = [](std::initializer_list<bool> flags) {
    DifficultyProfile p;
    p.correct_flags.assign(flags.begin(), flags.end());
    return classify_difficulty(p);
  };
  check(level_of({true, true, true, true}) == Level::LV1, "TTTT");
  check(level_of({true, true, false}) == Level::LV2, "TTF");
  check(level_of({true, true, false, false}) == Level::LV2, "TTFF");
  check(level_of({true, false, true, false}) == Level::LV3, "TFTF");
  check(level_of({false, false, false, false}) == Level::LV1, "FFFF");
  // Appending a duplicate of the last flag never changes the class.
  check(level_of({true, false, true, false, false}) == Level::LV3, "TFTFF");
  return "all crafted flag sequences map exactly";
}

// ---------------------------------------------------------------------------
// criterion 9: determinism and persistence

#ifndef GRIP_CLI_PATH
#error "GRIP_CLI_PATH must point at the CLI binary"
#endif

int run_cli(const std::string& args) {
  std::string cmd = std::string(GRIP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return status < 0 ? -1 : WEXITSTATUS(status);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Every artifact except the timing reports must come out byte-identical.
std::vector<fs::path> reproducible_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().rfind("timings_", 0) == 0) continue;
    out.push_back(fs::relative(entry.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string criterion_determinism() {
  SeededRng rng(5);
  ScorerParams params = ScorerParams::init(8, 16, rng);
  fs::path ckpt = fs::temp_directory_path() / "grip_acceptance_roundtrip.ckpt";
  save_checkpoint(ckpt.string(), params);
  ScorerParams loaded = load_checkpoint(ckpt.string());
  Vec a = params.flatten(), b = loaded.flatten();
  check(a.size() == b.size(), "round trip changed the parameter count");
  check(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0,
        "round trip not bit-exact");
  fs::remove(ckpt);

  fs::path work = fs::temp_directory_path() / "grip_acceptance_cli";
  fs::remove_all(work);
  fs::create_directories(work);
  fs::path run = work / "run";
  fs::path config = work / "config.json";
  {
    std::ofstream out(config);
    out << R"({
  "config_version": 1,
  "out_dir": ")" << run.generic_string() << R"(",
  "suite": {"count_lv1": 3, "count_lv2": 3, "count_lv3": 3, "height": 4, "width": 4,
            "feature_dim": 8, "task_mode": "verifiable", "master_seed": 404},
  "scorer": {"hidden": 8, "init_seed": 1},
  "budget": {"keep_ratio": 0.5, "layers": 4},
  "sft": {"epochs": 4, "learning_rate": 0.01, "batch_size": 4, "seed": 11,
          "curriculum": [[0, 1.0], [2, 0.5]]},
  "grpo": {"group_size": 8, "iterations": 3, "learning_rate": 0.001, "batch_tasks": 2,
           "seed": 12},
  "eval": {"keep_ratios": [0.5, 1.0], "partition_m": 2}
})";
  }
  auto run_all = [&] {
    std::string base = "--config " + config.string();
    check(run_cli("generate-suite " + base) == 0, "generate-suite failed");
    check(run_cli("train " + base) == 0, "train failed");
    check(run_cli("evaluate " + base) == 0, "evaluate failed");
  };
  run_all();
  fs::path stash = work / "first";
  fs::rename(run, stash);
  run_all();

  std::vector<fs::path> first = reproducible_files(stash);
  std::vector<fs::path> second = reproducible_files(run);
  check(first == second, "file sets differ between runs");
  check(!first.empty(), "no artifacts produced");
  int compared = 0;
  for (const fs::path& rel : first) {
    check(read_bytes(stash / rel) == read_bytes(run / rel),
          "bytes differ: " + rel.generic_string());
    ++compared;
  }
  fs::remove_all(work);
  return "checkpoint round trip bit-exact; " + std::to_string(compared) +
         " artifacts byte-identical across reruns";
}

}  // namespace

int main() {
  Gate gate;
  gate.run(1, "gradient correctness", criterion_gradients);
  gate.run(2, "exact identities", criterion_identities);
  gate.run(3, "oracle equivalence", criterion_oracle);
  gate.run(4, "credit assignment", criterion_credit);

  double t0 = now_s();
  TrainedArtifacts art = train_frozen();
  std::printf("-- shared training run: %s (%.1fs)\n", art.ready ? "ok" : art.error.c_str(),
              now_s() - t0);
  std::fflush(stdout);

  gate.run(5, "method ordering", [&] { return criterion_ordering(art); });
  gate.run(6, "ablation trends", [&] { return criterion_ablations(art); });
  gate.run(7, "granularity trend", [&] { return criterion_granularity(art); });
  gate.run(8, "difficulty classifier exactness", criterion_classifier);
  gate.run(9, "determinism and persistence", criterion_determinism);

  if (gate.failures > 0) {
    std::printf("%d criterion(s) failed\n", gate.failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
