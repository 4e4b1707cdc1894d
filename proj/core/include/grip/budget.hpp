#pragma once

#include <numeric>
#include <vector>

#include "grip/common.hpp"

namespace grip {

// Pruning budget for a multi-stage pipeline: stage i keeps a fraction r_i of
// the initial n0 tokens across l_i transformer layers. rho_target/rho_now
// condition the scorer (how hard to prune vs where we already are).
struct BudgetSpec {
  double rho_target = 1.0;
  double rho_now = 1.0;
  double t_target = 0.0;
  int n0 = 0;
  std::vector<int> stage_layers;
  std::vector<double> stage_keep_ratios;

  void validate() const {
    require(n0 >= 1, "BudgetSpec: n0 must be positive");
    require(rho_target >= 0.0 && rho_now <= 1.0 && rho_target <= rho_now,
            "BudgetSpec: need 0 <= rho_target <= rho_now <= 1");
    require(!stage_layers.empty(), "BudgetSpec: at least one stage");
    require(stage_layers.size() == stage_keep_ratios.size(),
            "BudgetSpec: stage_layers and stage_keep_ratios lengths differ");
    for (int l : stage_layers) require(l >= 1, "BudgetSpec: stage layer count must be >= 1");
    for (double r : stage_keep_ratios)
      require(r > 0.0 && r <= 1.0, "BudgetSpec: keep ratios must lie in (0,1]");
  }

  static BudgetSpec single_stage(int n0, double keep_ratio, int layers = 4) {
    BudgetSpec b;
    b.n0 = n0;
    b.rho_target = keep_ratio;
    b.rho_now = 1.0;
    b.stage_layers = {layers};
    b.stage_keep_ratios = {keep_ratio};
    b.t_target = keep_ratio * n0 * layers;
    b.validate();
    return b;
  }
};

// T_eq = sum_i r_i * n0 * l_i.
inline double equivalent_tokens(const BudgetSpec& budget) {
  budget.validate();
  double t = 0.0;
  for (size_t i = 0; i < budget.stage_layers.size(); ++i)
    t += budget.stage_keep_ratios[i] * budget.n0 * budget.stage_layers[i];
  return t;
}

// Same aggregate computed from the kept counts a concrete mask realized.
inline double realized_equivalent_tokens(const BudgetSpec& budget,
                                         const std::vector<int>& kept_per_stage) {
  budget.validate();
  require(kept_per_stage.size() == budget.stage_layers.size(),
          "realized_equivalent_tokens: one kept count per stage");
  double t = 0.0;
  for (size_t i = 0; i < kept_per_stage.size(); ++i) {
    require(kept_per_stage[i] >= 0 && kept_per_stage[i] <= budget.n0,
            "realized_equivalent_tokens: kept count out of range");
    t += static_cast<double>(kept_per_stage[i]) * budget.stage_layers[i];
  }
  return t;
}

}  // namespace grip
