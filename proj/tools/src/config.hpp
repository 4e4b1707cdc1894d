#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "grip/budget.hpp"
#include "grip/environment.hpp"
#include "grip/grpo.hpp"
#include "grip/scorer.hpp"
#include "grip/sft.hpp"

namespace grip::cli {

inline constexpr int kConfigVersion = 1;

// Everything one experiment needs, loaded from a single JSON file. Unknown
// keys are hard errors so typos cannot silently fall back to defaults.
struct ExperimentConfig {
  std::string out_dir = "runs/default";
  int threads = 1;

  SuiteSpec suite;

  int scorer_hidden = 16;
  uint64_t scorer_init_seed = 1;
  ScorerOptions scorer_options;

  // Training budget: one pruning stage at keep_ratio over `layers` layers.
  double budget_keep_ratio = 0.5;
  int budget_layers = 4;

  SftConfig sft;
  // Curriculum as (first epoch, keep ratio) pairs; converted to absolute
  // equivalent-token targets once the grid size is known.
  std::vector<std::pair<int, double>> sft_curriculum_ratios;

  GrpoConfig grpo;

  std::vector<double> eval_keep_ratios = {0.25, 0.5, 1.0};
  int eval_partition_m = 2;

  // Budget the optimized policy is held to; its t_target drives the GRPO
  // overage penalty.
  BudgetSpec train_budget() const {
    return BudgetSpec::single_stage(suite.height * suite.width, budget_keep_ratio,
                                    budget_layers);
  }

  // Distillation anneals from the most generous curriculum point down, so its
  // base budget is that starting ratio, not the final training ratio.
  BudgetSpec sft_base_budget() const;

  // SftConfig with the ratio curriculum resolved against this config's grid.
  SftConfig resolved_sft() const;
};

ExperimentConfig default_config();

// Strict parse: every key is checked, unknown keys anywhere are errors.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Canonical snapshot (sorted keys) used for sidecars and manifests; parsing
// it back yields an identical config.
nlohmann::json config_to_json(const ExperimentConfig& config);

const char* task_mode_name(TaskMode mode);
TaskMode task_mode_from_name(const std::string& name);

}  // namespace grip::cli
