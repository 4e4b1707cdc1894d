// Hot-path microbenchmarks: task generation, mask evaluation, the scorer
// forward/backward pair, and one full GRPO step. Grid sizes sweep the range
// the synthetic suites actually use.
#include <benchmark/benchmark.h>

#include <vector>

#include "grip/environment.hpp"
#include "grip/grpo.hpp"
#include "grip/scorer.hpp"

namespace {

using namespace grip;

SyntheticTask task_for(int side) {
  return generate_task(Level::LV3, side, side, 8, 42);
}

void bench_generate_task(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  uint64_t seed = 0;
  for (auto _ : state) {
    SyntheticTask task = generate_task(Level::LV3, side, side, 8, 9000 + seed++);
    benchmark::DoNotOptimize(task.grid.features.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bench_generate_task)->Arg(4)->Arg(8)->Arg(16);

void bench_evaluate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  SyntheticTask task = task_for(side);
  const int n = task.grid.tokens();
  RetentionMask mask = heuristic_topk(task, n / 2);
  for (auto _ : state) {
    TaskOutcome outcome = evaluate(task, mask);
    benchmark::DoNotOptimize(outcome.loss);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bench_evaluate)->Arg(4)->Arg(8)->Arg(16);

void bench_score_forward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  SyntheticTask task = task_for(side);
  const int n = task.grid.tokens();
  SeededRng rng(1);
  ScorerParams params = ScorerParams::init(8, 16, rng);
  BudgetSpec budget = BudgetSpec::single_stage(n, 0.5, 4);
  RetentionMask retained = RetentionMask::ones(n);
  for (auto _ : state) {
    ScoreOutput out = score(params, task.grid, retained, budget);
    benchmark::DoNotOptimize(out.probs.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bench_score_forward)->Arg(4)->Arg(8)->Arg(16);

void bench_score_backward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  SyntheticTask task = task_for(side);
  const int n = task.grid.tokens();
  SeededRng rng(1);
  ScorerParams params = ScorerParams::init(8, 16, rng);
  BudgetSpec budget = BudgetSpec::single_stage(n, 0.5, 4);
  ScoreTrace trace;
  score(params, task.grid, RetentionMask::ones(n), budget, {}, &trace);
  Vec upstream(n, 1.0);
  for (auto _ : state) {
    Vec grad = score_backward(params, task.grid, trace, upstream);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bench_score_backward)->Arg(4)->Arg(8)->Arg(16);

void bench_grpo_step(benchmark::State& state) {
  const int group_size = static_cast<int>(state.range(0));
  SyntheticTask task = task_for(8);
  const int n = task.grid.tokens();
  SeededRng rng(1);
  ScorerParams params = ScorerParams::init(8, 16, rng);
  ScorerParams ref = params;
  BudgetSpec budget = BudgetSpec::single_stage(n, 0.5, 4);
  GrpoConfig config;
  config.group_size = group_size;
  ScoreOutput out = score(params, task.grid, RetentionMask::ones(n), budget);
  uint64_t draw = 0;
  for (auto _ : state) {
    state.PauseTiming();
    SeededRng roll = rng.split("bench").split(draw++);
    std::vector<Rollout> group = rollout_group(out, task, budget, group_size, roll);
    fill_group_rewards(group, RewardMode::verifiable, 0.0, budget, config);
    fill_group_advantages(group);
    state.ResumeTiming();
    Vec grad;
    GrpoStepStats stats =
        grpo_loss_and_grad(params, ref, task, budget, group, config, {}, &grad);
    benchmark::DoNotOptimize(stats.objective);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * group_size);
}
BENCHMARK(bench_grpo_step)->Arg(8)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
