#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "grip/budget.hpp"
#include "grip/common.hpp"
#include "grip/environment.hpp"
#include "grip/mask.hpp"
#include "grip/scorer.hpp"

namespace grip {

// Deterministic selection rule: given a task and a kept-token count, return a
// mask keeping exactly that many tokens.
using SelectionPolicy = std::function<RetentionMask(const SyntheticTask&, int kept)>;

struct DifficultyProfile {
  std::vector<double> keep_ratios;
  std::vector<bool> correct_flags;
  Vec true_class_prob;
  int transitions = 0;
  Level level = Level::LV1;
};

struct GranularityReport {
  double max_component_ratio = 0.0;
  double spatial_entropy = 0.0;
  int partition_m = 0;
  int kept = 0;
};

// The 10-point sweep grid 0.1, 0.2, ..., 1.0.
std::vector<double> default_curve_ratios();

// Top-K selection backed by a trained scorer; the budget passed to the scorer
// tracks the requested ratio so budget conditioning sees what it is asked for.
SelectionPolicy make_scorer_policy(const ScorerParams& params, const ScorerOptions& options = {});

// The built-in blob-biased baseline as a SelectionPolicy.
SelectionPolicy make_heuristic_policy();

// Sweep the policy's deterministic top-K selection across the ratio grid and
// record correctness plus the softmax probability of the true class. Each
// ratio must map to K = round(ratio * N) >= 1. The level field is left at its
// default; classify_difficulty derives it.
DifficultyProfile correctness_curve(const SelectionPolicy& policy, const SyntheticTask& task,
                                    const std::vector<double>& keep_ratios);

// 0 transitions -> LV1, 1 -> LV2, >= 2 -> LV3. Reads only the flag sequence.
Level classify_difficulty(const DifficultyProfile& profile);

// Size of the largest 4-connected component of kept tokens, divided by the
// kept count. Empty masks are a hard error.
double max_component_ratio(const RetentionMask& mask, int height, int width);

// Shannon entropy (natural log) of the kept-token distribution over a uniform
// M x M partition of the grid; empty cells contribute nothing. M must not
// exceed min(H, W); empty masks are a hard error.
double spatial_entropy(const RetentionMask& mask, int height, int width, int partition_m);

GranularityReport granularity_report(const RetentionMask& mask, int height, int width,
                                     int partition_m);

// Quadratic-attention cost proxy: sum_i kept_i^2 * L_i over stages.
double flop_proxy(const BudgetSpec& budget, const std::vector<int>& kept_per_stage);

// Accuracy of one method on one difficulty level. count == 0 marks a level
// absent from the suite; its accuracy is meaningless and must be reported as
// absent, never as zero.
struct LevelAccuracy {
  int count = 0;
  int correct = 0;
  double accuracy() const { return count > 0 ? static_cast<double>(correct) / count : 0.0; }
};

struct MethodRow {
  std::string method;
  std::array<LevelAccuracy, 3> by_level;
  int total = 0;
  int total_correct = 0;
  double overall() const { return total > 0 ? static_cast<double>(total_correct) / total : 0.0; }
};

struct MethodComparison {
  std::vector<MethodRow> rows;          // heuristic, sl, rl
  std::array<int, 3> level_counts{};    // suite stratification sizes
  double keep_ratio = 0.0;
};

// Stratifies the suite by the heuristic policy's correctness curves (the
// method-independent protocol), then scores all three methods at the same
// top-K budget per task.
MethodComparison compare_methods(const std::vector<SyntheticTask>& suite,
                                 const ScorerParams& sl_params, const ScorerParams& rl_params,
                                 double keep_ratio, const ScorerOptions& options = {});

}  // namespace grip
