#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grip/common.hpp"
#include "grip/mask.hpp"
#include "grip/rng.hpp"

namespace grip {

// Difficulty levels name how a greedy heuristic's correctness behaves as the
// keep ratio shrinks: LV1 never breaks, LV2 breaks once and stays broken,
// LV3 oscillates (dropping more can fix what dropping less broke).
enum class Level { LV1, LV2, LV3 };

enum class TaskMode { verifiable, open_ended };

const char* level_name(Level level);
Level level_from_name(const std::string& name);

struct TokenGrid {
  int height = 0;
  int width = 0;
  int feature_dim = 0;
  std::vector<Vec> features;  // tokens x feature_dim
  Vec heuristic_scores;       // blob-biased proxy scores, one per token

  int tokens() const { return height * width; }
};

// A misleading decoy pair: dropping exactly one member only loses its mass,
// dropping both adds `bonus` back to the signal (XOR structure).
struct MisleadingPair {
  int a = 0;
  int b = 0;
  double bonus = 0.0;
};

struct OracleSpec {
  Vec importance_weights;          // w_i >= 0
  std::vector<int> critical_set;   // dropping any of these costs 4*tau
  std::vector<MisleadingPair> misleading_pairs;
  double decision_threshold = 0.0;  // tau, strictly inside (0, sum w)
  int num_classes = 4;
  TaskMode task_mode = TaskMode::verifiable;
};

struct SyntheticTask {
  TokenGrid grid;
  OracleSpec oracle;
  int label = 0;
  Level difficulty = Level::LV1;
  uint64_t seed = 0;
};

struct TaskOutcome {
  Vec logits;
  int predicted = 0;
  bool correct = false;
  double loss = 0.0;
};

struct TeacherOutput {
  Vec logits;
  Vec pooled_feature;  // mean over all token features
};

// Piecewise-linear oracle: signal = sum of kept importance, minus a 4*tau
// cliff per dropped critical token, plus the pair bonus whenever both decoy
// members are dropped. Logits put +/-(signal - tau) on the label and its
// successor class; remaining classes get constants too low to ever win.
TaskOutcome evaluate(const SyntheticTask& task, const RetentionMask& mask);

// Full-retention reference plus the mean token feature, used as the
// distillation target.
TeacherOutput teacher_evaluate(const SyntheticTask& task);

// Deterministic task construction. The generated task is re-checked against
// the level's defining correctness-curve shape under the built-in heuristic
// (0 / 1 / >=2 transitions) and resampled from a derived seed if the draw
// missed; construction failures after many attempts are hard errors.
SyntheticTask generate_task(Level level, int height, int width, int feature_dim,
                            uint64_t seed);

struct SuiteSpec {
  int count_lv1 = 0;
  int count_lv2 = 0;
  int count_lv3 = 0;
  int height = 8;
  int width = 8;
  int feature_dim = 8;
  uint64_t master_seed = 0;
  TaskMode task_mode = TaskMode::verifiable;
};

std::vector<SyntheticTask> generate_suite(const SuiteSpec& spec);

// Exact minimizer of the task loss over masks keeping at most max_kept
// tokens. Enumerates 2^N masks for N <= 20, or all C(N, <=K) kept-sets for
// K <= 3 and N <= 64; anything larger is a hard error. Loss ties break
// toward the lexicographically smallest bit sequence.
RetentionMask brute_force_optimal(const SyntheticTask& task, int max_kept);

// Top-K by heuristic score (ties keep the lower index): the blob-biased
// baseline policy used for difficulty classification and comparisons.
RetentionMask heuristic_topk(const SyntheticTask& task, int kept);

// Task and suite serialization (JSON text, stable key order).
std::string task_to_json(const SyntheticTask& task);
SyntheticTask task_from_json(const std::string& text);

}  // namespace grip
