#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grip/analysis.hpp"
#include "grip/numeric.hpp"
#include "grip/sft.hpp"

using namespace grip;

TEST_CASE("set-level loss fixtures") {
  Vec probs = {0.5, 0.5};
  RetentionMask keep_first = RetentionMask::from_bits({1, 0});
  // -log 1/2, hand value.
  CHECK(sft_set_level_loss(keep_first, probs, 1) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(sft_set_level_loss(keep_first, probs, 0) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-12));

  RetentionMask all = RetentionMask::ones(2);
  CHECK(sft_set_level_loss(all, probs, 0) == doctest::Approx(0.0));
  CHECK(sft_set_level_loss(all, probs, 1) ==
        doctest::Approx(2.0 * 0.6931471805599453).epsilon(1e-12));

  Vec skew = {0.8, 0.3};
  // R=1 charges kept tokens only: -ln 0.8.
  CHECK(sft_set_level_loss(keep_first, skew, 1) ==
        doctest::Approx(-std::log(0.8)).epsilon(1e-12));
  // R=0 charges dropped tokens only: -ln(1 - 0.3).
  CHECK(sft_set_level_loss(keep_first, skew, 0) ==
        doctest::Approx(-std::log(0.7)).epsilon(1e-12));

  CHECK_THROWS(sft_set_level_loss(keep_first, probs, 2));
  CHECK_THROWS(sft_set_level_loss(keep_first, {1.0, 0.5}, 1));
  CHECK_THROWS(sft_set_level_loss(RetentionMask::ones(3), probs, 1));
}

TEST_CASE("distillation loss components and additivity") {
  SftConfig config;
  config.alpha_kl = 1.0;
  config.beta_ratio = 10.0;

  TeacherOutput teacher;
  teacher.logits = {1.0, 0.0};
  teacher.pooled_feature = {0.5, -0.5};

  SUBCASE("student equal to teacher scores zero distill and kl") {
    TaskOutcome student;
    student.logits = teacher.logits;
    SftLossBreakdown b = distill_losses(student, teacher.pooled_feature, teacher,
                                        {0.5, 0.5}, 0.5, config);
    CHECK(b.l_distill == doctest::Approx(0.0));
    CHECK(b.l_kl == doctest::Approx(0.0));
    CHECK(b.l_ratio == doctest::Approx(0.0));
    CHECK(b.total == doctest::Approx(0.0));
  }

  SUBCASE("kl fixture: softmax(1,0) against softmax(0,1)") {
    TaskOutcome student;
    student.logits = {0.0, 1.0};
    SftLossBreakdown b = distill_losses(student, teacher.pooled_feature, teacher,
                                        {0.5, 0.5}, 0.5, config);
    // KL = p1 - p2 with p = softmax(1,0); hand value sigma(1) - sigma(-1).
    CHECK(b.l_kl == doctest::Approx(0.46211715726000974).epsilon(1e-12));
  }

  SUBCASE("component arithmetic is exact") {
    TaskOutcome student;
    student.logits = {0.0, 1.0};
    Vec pooled = {1.5, -0.5};  // MSE = ((1.0)^2 + 0)/2 = 0.5
    Vec probs = {0.7, 0.5};   // mean 0.6 vs target 0.5
    config.alpha_kl = 2.0;
    config.beta_ratio = 3.0;
    SftLossBreakdown b = distill_losses(student, pooled, teacher, probs, 0.5, config);
    CHECK(b.l_distill == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.l_ratio == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(b.total ==
          doctest::Approx(b.l_distill + 2.0 * b.l_kl + 3.0 * b.l_ratio).epsilon(1e-12));
    CHECK(b.l_distill >= 0.0);
    CHECK(b.l_kl >= 0.0);
    CHECK(b.l_ratio >= 0.0);
  }
}

TEST_CASE("equivalent token arithmetic") {
  BudgetSpec full;
  full.n0 = 100;
  full.stage_layers = {4, 4, 4};
  full.stage_keep_ratios = {1.0, 1.0, 1.0};
  CHECK(equivalent_tokens(full) == doctest::Approx(1200.0));

  BudgetSpec pruned;
  pruned.n0 = 64;
  pruned.rho_target = 0.25;
  pruned.stage_layers = {3, 5};
  pruned.stage_keep_ratios = {0.5, 0.25};
  // 0.5*64*3 + 0.25*64*5 = 96 + 80, hand arithmetic.
  CHECK(equivalent_tokens(pruned) == doctest::Approx(176.0));
}

TEST_CASE("curriculum targets are piecewise constant with rescaled ratios") {
  BudgetSpec base;
  base.n0 = 100;
  base.stage_layers = {4, 4, 4};
  base.stage_keep_ratios = {1.0, 1.0, 1.0};

  SftConfig config;
  config.curriculum = {{0, 1200.0}, {5, 600.0}};

  CurriculumPoint p4 = curriculum_target(config, 4, base);
  CHECK(p4.t_eq == doctest::Approx(1200.0));
  CurriculumPoint p5 = curriculum_target(config, 5, base);
  CHECK(p5.t_eq == doctest::Approx(600.0));
  for (double r : p5.budget.stage_keep_ratios) CHECK(r == doctest::Approx(0.5));
  CHECK(equivalent_tokens(p5.budget) == doctest::Approx(600.0).epsilon(1e-9));
  CHECK(curriculum_target(config, 50, base).t_eq == doctest::Approx(600.0));

  SftConfig empty;
  CHECK_THROWS(curriculum_target(empty, 0, base));
  SftConfig increasing;
  increasing.curriculum = {{0, 600.0}, {5, 1200.0}};
  CHECK_THROWS(curriculum_target(increasing, 0, base));
  SftConfig late_start;
  late_start.curriculum = {{2, 600.0}};
  CHECK_THROWS(curriculum_target(late_start, 0, base));
}

namespace {

GradFn sft_loss_fn(const SyntheticTask& task, const BudgetSpec& budget, const SftConfig& config,
                   const ScorerOptions& options, const ScorerParams& proto) {
  return [=](const Vec& flat, Vec* grad_out) {
    ScorerParams params = proto;
    params.unflatten(flat);
    Vec grad(params.param_count(), 0.0);
    SftLossBreakdown b = sft_sample_losses(params, task, budget, config, options,
                                           /*hard_selection=*/false,
                                           grad_out != nullptr ? &grad : nullptr, nullptr);
    if (grad_out != nullptr) *grad_out = grad;
    return b.total;
  };
}

}  // namespace

TEST_CASE("soft-path gradient matches finite differences") {
  SftConfig config;
  config.alpha_kl = 1.0;
  config.beta_ratio = 10.0;
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    SyntheticTask task = generate_task(Level::LV2, 4, 4, 8, 600 + seed);
    BudgetSpec budget = BudgetSpec::single_stage(16, 0.5);
    SeededRng rng(seed);
    ScorerParams proto = ScorerParams::init(8, 6, rng);
    double err = finite_diff_check(sft_loss_fn(task, budget, config, {}, proto),
                                   proto.flatten(), 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("training is deterministic and zero epochs is the identity") {
  std::vector<SyntheticTask> tasks;
  for (int i = 0; i < 4; ++i) tasks.push_back(generate_task(Level::LV2, 4, 4, 8, 700 + i));
  SeededRng rng(9);
  ScorerParams initial = ScorerParams::init(8, 8, rng);
  BudgetSpec base = BudgetSpec::single_stage(16, 0.5);

  SftConfig config;
  config.epochs = 0;
  config.curriculum = {{0, equivalent_tokens(base)}};
  SftResult unchanged = train_sft(tasks, config, initial, base);
  CHECK(unchanged.params.flatten() == initial.flatten());
  CHECK(unchanged.log.empty());

  config.epochs = 3;
  config.seed = 42;
  SftResult a = train_sft(tasks, config, initial, base);
  SftResult b = train_sft(tasks, config, initial, base);
  CHECK(a.params.flatten() == b.params.flatten());
  REQUIRE(a.log.size() == 3);
  CHECK(a.log[0].epoch == 0);
  CHECK(a.log[0].t_eq_target == doctest::Approx(equivalent_tokens(base)));
  for (const SftEpochLog& log : a.log)
    CHECK(log.total ==
          doctest::Approx(log.l_distill + config.alpha_kl * log.l_kl +
                          config.beta_ratio * log.l_ratio)
              .epsilon(1e-9));
}

TEST_CASE("distillation solves a single lv2 task close to the optimum") {
  SyntheticTask task = generate_task(Level::LV2, 4, 4, 8, 808);
  const int n = task.grid.tokens();
  const int k = n / 2;
  BudgetSpec base = BudgetSpec::single_stage(n, 0.5);

  SeededRng rng(17);
  ScorerParams initial = ScorerParams::init(8, 8, rng);
  SftConfig config;
  config.epochs = 150;
  config.learning_rate = 0.02;
  config.batch_size = 1;
  config.seed = 5;
  config.curriculum = {{0, equivalent_tokens(base)}};

  SftResult result = train_sft({task}, config, initial, base);
  ScoreOutput out = score(result.params, task.grid, RetentionMask::ones(n), base);
  RetentionMask mask = select_topk(out, k);
  TaskOutcome outcome = evaluate(task, mask);
  CHECK(outcome.correct);

  RetentionMask best = brute_force_optimal(task, k);
  double best_loss = evaluate(task, best).loss;
  CHECK(outcome.loss <= best_loss * 1.1 + 1e-9);
}

TEST_CASE("warm-up beats the blob heuristic on an lv1+lv2 suite") {
  SuiteSpec spec;
  spec.count_lv1 = 6;
  spec.count_lv2 = 10;
  spec.master_seed = 303;
  std::vector<SyntheticTask> tasks = generate_suite(spec);

  const int n = 64;
  BudgetSpec base = BudgetSpec::single_stage(n, 0.5);
  SeededRng rng(21);
  ScorerParams initial = ScorerParams::init(8, 16, rng);

  SftConfig config;
  config.epochs = 30;
  config.learning_rate = 0.01;
  config.seed = 7;
  config.curriculum = {{0, equivalent_tokens(base)}};
  SftResult result = train_sft(tasks, config, initial, base);

  int sl_correct = 0, heuristic_correct = 0;
  for (const SyntheticTask& task : tasks) {
    ScoreOutput out = score(result.params, task.grid, RetentionMask::ones(n), base);
    sl_correct += evaluate(task, select_topk(out, n / 2)).correct ? 1 : 0;
    heuristic_correct += evaluate(task, heuristic_topk(task, n / 2)).correct ? 1 : 0;
  }
  CHECK(sl_correct > heuristic_correct);
  // Loss log should improve over training.
  CHECK(result.log.back().total < result.log.front().total);
}
