#pragma once

#include <vector>

#include "grip/budget.hpp"
#include "grip/common.hpp"
#include "grip/environment.hpp"
#include "grip/mask.hpp"
#include "grip/numeric.hpp"
#include "grip/rng.hpp"

namespace grip {

// Ablation switches. Disabling the budget modulator pins gamma=beta=0, which
// makes the scorer blind to the requested keep ratio; disabling heuristic
// fusion makes s_final = s_ours regardless of the gate.
struct ScorerOptions {
  bool disable_film_modulator = false;
  bool disable_heuristic_fusion = false;
};

// Six dense layers in a fixed order (also the checkpoint/flatten order):
//   [0] extractor d -> h (tanh)       [1] extractor h -> h (tanh)
//   [2] film (2+h) -> h (tanh)        [3] film h -> 2h (identity; gamma|beta)
//   [4] fusion 2h -> h (tanh)         [5] fusion h -> 2 (identity; score|gate)
struct ScorerParams {
  int feature_dim = 0;
  int hidden = 0;
  std::vector<DenseLayer> layers;

  static ScorerParams init(int feature_dim, int hidden, SeededRng& rng);
  int param_count() const;
  Vec flatten() const;
  void unflatten(const Vec& flat);
};

struct ScoreOutput {
  Vec probs;        // retention probabilities, sigma(s_final) clamped away from {0,1}
  Vec s_final;      // fused logit per token
  Vec s_ours;       // learned logit before fusion
  Vec alpha_gate;   // fusion gate per token, in (0,1)
  Vec film_gamma;   // sample-level modulation
  Vec film_beta;
};

// Every intermediate needed to backprop through score() without refits.
struct ScoreTrace {
  std::vector<Vec> ext1_out;   // per token, extractor layer 1 activations
  std::vector<Vec> f_local;    // per token, extractor output
  std::vector<Vec> f_tilde;    // per token, modulated features
  std::vector<Vec> f_unique;   // per token, deviation from global context
  std::vector<Vec> fus1_out;   // per token, fusion hidden activations
  std::vector<Vec> fus2_out;   // per token, raw (score, gate) head outputs
  Vec film_in, film1_out, film2_out;
  Vec c_global;
  Vec heuristic_z;             // z-scored heuristic prior
  RetentionMask retained = RetentionMask::ones(1);
  ScoreOutput out;
};

struct FilmResult {
  std::vector<Vec> f_tilde;
  Vec gamma, beta;
};

std::vector<Vec> extract_local(const ScorerParams& params, const TokenGrid& grid);
Vec global_context(const std::vector<Vec>& f_local, const RetentionMask& retained);
FilmResult film_modulate(const ScorerParams& params, const std::vector<Vec>& f_local,
                         double rho_target, double rho_now, const Vec& c_global);
ScoreOutput fuse_scores(const ScorerParams& params, const std::vector<Vec>& f_tilde,
                        const std::vector<Vec>& f_unique, const Vec& heuristic_z);

// Full pipeline. heuristic scores are z-scored internally before fusion.
ScoreOutput score(const ScorerParams& params, const TokenGrid& grid,
                  const RetentionMask& retained, const BudgetSpec& budget,
                  const ScorerOptions& options = {}, ScoreTrace* trace = nullptr);

// d_s_final is dL/ds per token; returns dL/dparams in flatten() order.
Vec score_backward(const ScorerParams& params, const TokenGrid& grid,
                   const ScoreTrace& trace, const Vec& d_s_final,
                   const ScorerOptions& options = {});

RetentionMask select_topk(const ScoreOutput& output, int k);

struct SampleResult {
  RetentionMask mask = RetentionMask::ones(1);
  double log_prob = 0.0;
  bool forced_keep = false;  // all-zeros draw was repaired by keeping the argmax token
};

SampleResult sample_bernoulli(const ScoreOutput& output, SeededRng& rng);

// Log-probability of an arbitrary mask under the output's Bernoulli field.
double mask_log_prob(const ScoreOutput& output, const RetentionMask& mask);

}  // namespace grip
