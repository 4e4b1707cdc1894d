#include "grip/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "grip/numeric.hpp"

namespace grip {

std::vector<double> default_curve_ratios() {
  std::vector<double> ratios(10);
  for (int i = 0; i < 10; ++i) ratios[i] = 0.1 * (i + 1);
  return ratios;
}

SelectionPolicy make_scorer_policy(const ScorerParams& params, const ScorerOptions& options) {
  return [params, options](const SyntheticTask& task, int kept) {
    const int n = task.grid.tokens();
    require(kept >= 1 && kept <= n, "scorer policy: kept count out of range");
    BudgetSpec budget = BudgetSpec::single_stage(n, static_cast<double>(kept) / n);
    ScoreOutput out = score(params, task.grid, RetentionMask::ones(n), budget, options);
    return select_topk(out, kept);
  };
}

SelectionPolicy make_heuristic_policy() {
  return [](const SyntheticTask& task, int kept) { return heuristic_topk(task, kept); };
}

DifficultyProfile correctness_curve(const SelectionPolicy& policy, const SyntheticTask& task,
                                    const std::vector<double>& keep_ratios) {
  require(!keep_ratios.empty(), "correctness_curve: empty ratio list");
  const int n = task.grid.tokens();
  DifficultyProfile profile;
  profile.keep_ratios = keep_ratios;
  double prev = 0.0;
  for (double ratio : keep_ratios) {
    require(ratio > prev, "correctness_curve: ratios must be sorted ascending");
    require(ratio <= 1.0, "correctness_curve: ratios must lie in (0,1]");
    prev = ratio;
    int k = static_cast<int>(std::llround(ratio * n));
    require(k >= 1, "correctness_curve: ratio rounds to an empty selection");
    RetentionMask mask = policy(task, k);
    TaskOutcome outcome = evaluate(task, mask);
    profile.correct_flags.push_back(outcome.correct);
    profile.true_class_prob.push_back(softmax(outcome.logits)[task.label]);
  }
  for (size_t i = 1; i < profile.correct_flags.size(); ++i)
    profile.transitions += profile.correct_flags[i] != profile.correct_flags[i - 1] ? 1 : 0;
  return profile;
}

Level classify_difficulty(const DifficultyProfile& profile) {
  require(!profile.correct_flags.empty(), "classify_difficulty: empty profile");
  int transitions = 0;
  for (size_t i = 1; i < profile.correct_flags.size(); ++i)
    transitions += profile.correct_flags[i] != profile.correct_flags[i - 1] ? 1 : 0;
  if (transitions == 0) return Level::LV1;
  if (transitions == 1) return Level::LV2;
  return Level::LV3;
}

double max_component_ratio(const RetentionMask& mask, int height, int width) {
  require(height >= 1 && width >= 1, "max_component_ratio: bad grid shape");
  require(mask.size() == height * width, "max_component_ratio: mask does not match grid");
  require(mask.kept >= 1, "max_component_ratio: empty mask");
  std::vector<uint8_t> seen(mask.size(), 0);
  int largest = 0;
  for (int start = 0; start < mask.size(); ++start) {
    if (!mask.get(start) || seen[start]) continue;
    int size = 0;
    std::queue<int> frontier;
    frontier.push(start);
    seen[start] = 1;
    while (!frontier.empty()) {
      int idx = frontier.front();
      frontier.pop();
      ++size;
      int r = idx / width;
      int c = idx % width;
      const int dr[] = {-1, 1, 0, 0};
      const int dc[] = {0, 0, -1, 1};
      for (int d = 0; d < 4; ++d) {
        int nr = r + dr[d];
        int nc = c + dc[d];
        if (nr < 0 || nr >= height || nc < 0 || nc >= width) continue;
        int nidx = nr * width + nc;
        if (!mask.get(nidx) || seen[nidx]) continue;
        seen[nidx] = 1;
        frontier.push(nidx);
      }
    }
    largest = std::max(largest, size);
  }
  return static_cast<double>(largest) / mask.kept;
}

double spatial_entropy(const RetentionMask& mask, int height, int width, int partition_m) {
  require(height >= 1 && width >= 1, "spatial_entropy: bad grid shape");
  require(mask.size() == height * width, "spatial_entropy: mask does not match grid");
  require(mask.kept >= 1, "spatial_entropy: empty mask");
  require(partition_m >= 1 && partition_m <= std::min(height, width),
          "spatial_entropy: partition must satisfy 1 <= M <= min(H, W)");
  std::vector<int> counts(partition_m * partition_m, 0);
  for (int idx = 0; idx < mask.size(); ++idx) {
    if (!mask.get(idx)) continue;
    int cell_r = (idx / width) * partition_m / height;
    int cell_c = (idx % width) * partition_m / width;
    ++counts[cell_r * partition_m + cell_c];
  }
  double entropy = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    double q = static_cast<double>(c) / mask.kept;
    entropy -= q * std::log(q);
  }
  return entropy;
}

GranularityReport granularity_report(const RetentionMask& mask, int height, int width,
                                     int partition_m) {
  GranularityReport report;
  report.max_component_ratio = max_component_ratio(mask, height, width);
  report.spatial_entropy = spatial_entropy(mask, height, width, partition_m);
  report.partition_m = partition_m;
  report.kept = mask.kept;
  return report;
}

double flop_proxy(const BudgetSpec& budget, const std::vector<int>& kept_per_stage) {
  budget.validate();
  require(kept_per_stage.size() == budget.stage_layers.size(),
          "flop_proxy: one kept count per stage");
  double total = 0.0;
  for (size_t i = 0; i < kept_per_stage.size(); ++i) {
    require(kept_per_stage[i] >= 0 && kept_per_stage[i] <= budget.n0,
            "flop_proxy: kept count out of range");
    double k = kept_per_stage[i];
    total += k * k * budget.stage_layers[i];
  }
  return total;
}

MethodComparison compare_methods(const std::vector<SyntheticTask>& suite,
                                 const ScorerParams& sl_params, const ScorerParams& rl_params,
                                 double keep_ratio, const ScorerOptions& options) {
  require(!suite.empty(), "compare_methods: empty suite");
  require(keep_ratio > 0.0 && keep_ratio <= 1.0, "compare_methods: keep ratio must be in (0,1]");

  MethodComparison cmp;
  cmp.keep_ratio = keep_ratio;
  cmp.rows = {MethodRow{"heuristic", {}, 0, 0}, MethodRow{"sl", {}, 0, 0},
              MethodRow{"rl", {}, 0, 0}};

  SelectionPolicy heuristic = make_heuristic_policy();
  SelectionPolicy policies[3] = {heuristic, make_scorer_policy(sl_params, options),
                                 make_scorer_policy(rl_params, options)};
  std::vector<double> grid = default_curve_ratios();

  for (const SyntheticTask& task : suite) {
    Level level = classify_difficulty(correctness_curve(heuristic, task, grid));
    int li = static_cast<int>(level);
    ++cmp.level_counts[li];
    const int n = task.grid.tokens();
    int k = std::clamp(static_cast<int>(std::llround(keep_ratio * n)), 1, n);
    for (int m = 0; m < 3; ++m) {
      RetentionMask mask = policies[m](task, k);
      bool correct = evaluate(task, mask).correct;
      ++cmp.rows[m].by_level[li].count;
      cmp.rows[m].by_level[li].correct += correct ? 1 : 0;
      ++cmp.rows[m].total;
      cmp.rows[m].total_correct += correct ? 1 : 0;
    }
  }
  return cmp;
}

}  // namespace grip
