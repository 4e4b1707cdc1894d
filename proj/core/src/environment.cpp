#include "grip/environment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>

#include "grip/numeric.hpp"
#include "json.hpp"

namespace grip {

namespace {

// Construction constants. The three levels differ only in where importance
// mass sits and how the decision threshold relates to it:
//   LV1: near-uniform mass, tiny threshold  -> any small subset suffices.
//   LV2: concentrated mass, high threshold  -> must find the concentrated set.
//   LV3: LV2 plus decoy pairs and cliffs, threshold one hair under full mass
//        -> keeping everything barely works and naive subsets never do; only
//        completed decoy drops buy back headroom.
constexpr double kImportantLo = 0.9, kImportantHi = 1.1;
constexpr double kOrdinaryLo = 0.02, kOrdinaryHi = 0.06;
constexpr double kPairLo = 0.12, kPairHi = 0.2;
constexpr double kUniformLo = 0.8, kUniformHi = 1.2;
constexpr double kSlackLo = 0.008, kSlackHi = 0.012;
constexpr double kLv1TauFraction = 0.05;
constexpr double kLv2TauFraction = 0.9;
constexpr double kSmallPairBoost = 0.25;
constexpr int kMaxAttempts = 256;
constexpr int kDefaultClasses = 4;

int neighbors4(int idx, int h, int w, int out[4]) {
  int r = idx / w, c = idx % w, n = 0;
  if (r > 0) out[n++] = idx - w;
  if (r + 1 < h) out[n++] = idx + w;
  if (c > 0) out[n++] = idx - 1;
  if (c + 1 < w) out[n++] = idx + 1;
  return n;
}

// Three passes of inclusive neighbor averaging: the source of the blob bias.
Vec smooth_field(const Vec& field, int h, int w) {
  Vec cur = field;
  int nbr[4];
  for (int pass = 0; pass < 3; ++pass) {
    Vec next(cur.size());
    for (int i = 0; i < static_cast<int>(cur.size()); ++i) {
      int deg = neighbors4(i, h, w, nbr);
      double sum = cur[i];
      for (int k = 0; k < deg; ++k) sum += cur[nbr[k]];
      next[i] = sum / (1.0 + deg);
    }
    cur = std::move(next);
  }
  return cur;
}

struct Layout {
  std::vector<int> blob_cells;
  std::vector<int> single_cells;
  std::vector<std::pair<int, int>> pair_cells;
  std::vector<int> critical_cells;
};

std::optional<std::vector<int>> grow_blob(int h, int w, int size,
                                          const std::vector<char>& blocked,
                                          SeededRng& rng) {
  int n = h * w;
  int nbr[4];
  for (int tries = 0; tries < 64; ++tries) {
    int anchor = static_cast<int>(rng.below(n));
    if (blocked[anchor]) continue;
    std::vector<int> cells{anchor};
    std::vector<char> in_blob(n, 0);
    in_blob[anchor] = 1;
    while (static_cast<int>(cells.size()) < size) {
      std::vector<int> frontier;
      for (int cell : cells) {
        int deg = neighbors4(cell, h, w, nbr);
        for (int k = 0; k < deg; ++k)
          if (!blocked[nbr[k]] && !in_blob[nbr[k]]) frontier.push_back(nbr[k]);
      }
      if (frontier.empty()) break;
      int pick = frontier[rng.below(frontier.size())];
      cells.push_back(pick);
      in_blob[pick] = 1;
    }
    if (static_cast<int>(cells.size()) == size) return cells;
  }
  return std::nullopt;
}

std::optional<Layout> build_layout(Level level, int h, int w, SeededRng& rng) {
  int n = h * w;
  int n_imp = std::clamp(static_cast<int>(std::llround(0.22 * n)), 2, n / 2);
  int n_blobs = n >= 36 ? 2 : 1;
  int blob_total = std::max(n_blobs, static_cast<int>(std::llround(0.6 * n_imp)));
  if (blob_total >= n_imp) blob_total = n_imp - 1;  // always keep >=1 singleton
  int n_singles = n_imp - blob_total;

  Layout lay;
  std::vector<char> used(n, 0), blocked(n, 0);
  int nbr[4];
  auto occupy = [&](int cell, bool separate) {
    used[cell] = 1;
    blocked[cell] = 1;
    if (separate) {
      int deg = neighbors4(cell, h, w, nbr);
      for (int k = 0; k < deg; ++k) blocked[nbr[k]] = 1;
    }
  };

  for (int b = 0; b < n_blobs; ++b) {
    int size = blob_total / n_blobs + (b == 0 ? blob_total % n_blobs : 0);
    auto cells = grow_blob(h, w, size, blocked, rng);
    if (!cells) return std::nullopt;
    for (int cell : *cells) lay.blob_cells.push_back(cell);
    for (int cell : *cells) occupy(cell, true);
  }

  for (int s = 0; s < n_singles; ++s) {
    int cell = -1;
    for (int tries = 0; tries < 200; ++tries) {
      int cand = static_cast<int>(rng.below(n));
      if (!blocked[cand]) { cell = cand; break; }
    }
    if (cell < 0) {  // crowded grid: accept any free cell
      for (int tries = 0; tries < 200 && cell < 0; ++tries) {
        int cand = static_cast<int>(rng.below(n));
        if (!used[cand]) cell = cand;
      }
    }
    if (cell < 0) return std::nullopt;
    lay.single_cells.push_back(cell);
    occupy(cell, true);
  }

  if (level == Level::LV3) {
    int n_pairs = 1 + static_cast<int>(rng.below(3));
    for (int p = 0; p < n_pairs; ++p) {
      bool placed = false;
      for (int tries = 0; tries < 200 && !placed; ++tries) {
        int host = lay.blob_cells[rng.below(lay.blob_cells.size())];
        int deg = neighbors4(host, h, w, nbr);
        int a = -1;
        for (int k = 0; k < deg; ++k) {
          int cand = nbr[(k + static_cast<int>(rng.below(4))) % deg];
          if (!used[cand]) { a = cand; break; }
        }
        if (a < 0) continue;
        int dega = neighbors4(a, h, w, nbr);
        for (int k = 0; k < dega; ++k) {
          int cand = nbr[(k + static_cast<int>(rng.below(4))) % dega];
          if (!used[cand] && cand != host) {
            lay.pair_cells.emplace_back(a, cand);
            used[a] = 1;
            used[cand] = 1;
            placed = true;
            break;
          }
        }
      }
      if (!placed && p == 0) return std::nullopt;  // at least one pair required
      if (!placed) break;
    }

    int n_crit = static_cast<int>(rng.below(3));
    std::vector<int> pool = lay.blob_cells;
    for (int c = 0; c < n_crit && !pool.empty(); ++c) {
      size_t pick = rng.below(pool.size());
      lay.critical_cells.push_back(pool[pick]);
      pool.erase(pool.begin() + pick);
    }
  }
  return lay;
}

// Correctness pattern of the blob heuristic across the canonical keep-ratio
// grid; the transition count is the level's defining property.
std::pair<std::vector<bool>, int> heuristic_curve(const SyntheticTask& task) {
  int n = task.grid.tokens();
  std::vector<bool> flags;
  for (int step = 1; step <= 10; ++step) {
    double ratio = 0.1 * step;
    int k = std::max<int>(1, static_cast<int>(std::llround(ratio * n)));
    flags.push_back(evaluate(task, heuristic_topk(task, k)).correct);
  }
  int transitions = 0;
  for (size_t i = 1; i < flags.size(); ++i)
    if (flags[i] != flags[i - 1]) ++transitions;
  return {flags, transitions};
}

bool curve_matches_level(const SyntheticTask& task) {
  auto [flags, transitions] = heuristic_curve(task);
  switch (task.difficulty) {
    case Level::LV1:
      return transitions == 0 && flags.back();
    case Level::LV2:
      return transitions == 1 && flags.back();
    case Level::LV3:
      return transitions >= 2;
  }
  return false;
}

bool structural_checks_pass(const SyntheticTask& task) {
  int n = task.grid.tokens();
  if (!evaluate(task, RetentionMask::ones(n)).correct) return false;
  if (evaluate(task, RetentionMask::zeros(n)).correct) return false;
  // Exact XOR per decoy pair: drop-one fails, drop-both recovers.
  for (const auto& pair : task.oracle.misleading_pairs) {
    auto drop = [&](std::initializer_list<int> idxs) {
      RetentionMask m = RetentionMask::ones(n);
      for (int i : idxs) m.set(i, false);
      return evaluate(task, m).correct;
    };
    if (drop({pair.a})) return false;
    if (drop({pair.b})) return false;
    if (!drop({pair.a, pair.b})) return false;
  }
  return true;
}

SyntheticTask generate_attempt(Level level, int h, int w, int d, uint64_t seed,
                               int attempt, bool& ok) {
  ok = false;
  SeededRng base = SeededRng(seed).split("task-attempt").split(attempt);
  SeededRng rng_layout = base.split("layout");
  SeededRng rng_w = base.split("weights");
  SeededRng rng_noise = base.split("noise");
  SeededRng rng_feat = base.split("features");
  SeededRng rng_label = base.split("label");

  int n = h * w;
  SyntheticTask task;
  task.seed = seed;
  task.difficulty = level;
  task.grid.height = h;
  task.grid.width = w;
  task.grid.feature_dim = d;
  task.label = static_cast<int>(rng_label.below(kDefaultClasses));
  task.oracle.num_classes = kDefaultClasses;

  Vec& wts = task.oracle.importance_weights;
  wts.assign(n, 0.0);
  std::vector<char> is_pair(n, 0), is_crit(n, 0);

  if (level == Level::LV1) {
    for (int i = 0; i < n; ++i) wts[i] = rng_w.uniform(kUniformLo, kUniformHi);
    double total = std::accumulate(wts.begin(), wts.end(), 0.0);
    task.oracle.decision_threshold = kLv1TauFraction * total;
  } else {
    auto lay = build_layout(level, h, w, rng_layout);
    if (!lay) return task;
    for (int i = 0; i < n; ++i) wts[i] = rng_w.uniform(kOrdinaryLo, kOrdinaryHi);
    double imp_mass = 0.0, blob_mass = 0.0;
    for (int cell : lay->blob_cells) {
      wts[cell] = rng_w.uniform(kImportantLo, kImportantHi);
      imp_mass += wts[cell];
      blob_mass += wts[cell];
    }
    for (int cell : lay->single_cells) {
      wts[cell] = rng_w.uniform(kImportantLo, kImportantHi);
      imp_mass += wts[cell];
    }
    for (auto [a, b] : lay->pair_cells) {
      wts[a] = rng_w.uniform(kPairLo, kPairHi);
      wts[b] = rng_w.uniform(kPairLo, kPairHi);
      is_pair[a] = is_pair[b] = 1;
    }
    task.oracle.critical_set = lay->critical_cells;
    std::sort(task.oracle.critical_set.begin(), task.oracle.critical_set.end());
    for (int cell : task.oracle.critical_set) is_crit[cell] = 1;

    double total = std::accumulate(wts.begin(), wts.end(), 0.0);
    if (level == Level::LV2) {
      task.oracle.decision_threshold = kLv2TauFraction * imp_mass;
    } else {
      double slack = rng_w.uniform(kSlackLo, kSlackHi);
      task.oracle.decision_threshold = total - slack;
      // First pair carries the recovery budget: dropping it forgives losing
      // everything outside the blob cores. Later pairs stay XOR-exact but
      // cheap, keeping the total bonus strictly below tau (the all-dropped
      // mask must stay wrong).
      for (size_t p = 0; p < lay->pair_cells.size(); ++p) {
        auto [a, b] = lay->pair_cells[p];
        double boost = p == 0 ? total - blob_mass - wts[a] - wts[b] + 0.6
                              : kSmallPairBoost;
        task.oracle.misleading_pairs.push_back({a, b, wts[a] + wts[b] + boost});
      }
      double bonus_total = 0.0;
      for (const auto& pr : task.oracle.misleading_pairs) bonus_total += pr.bonus;
      if (bonus_total >= task.oracle.decision_threshold - 0.25) return task;
    }
  }

  // Blob-biased heuristic: smoothed importance plus proportional noise.
  Vec smoothed = smooth_field(wts, h, w);
  double mean = std::accumulate(smoothed.begin(), smoothed.end(), 0.0) / n;
  task.grid.heuristic_scores.resize(n);
  for (int i = 0; i < n; ++i)
    task.grid.heuristic_scores[i] = smoothed[i] + 0.05 * mean * rng_noise.gaussian();

  // Token features: enough signal that a per-token scorer can in principle
  // recover importance, decoy membership, and cliff membership, plus
  // position, a heuristic echo, and distractor noise channels.
  Vec heur_z = zscore(task.grid.heuristic_scores);
  task.grid.features.assign(n, Vec(d, 0.0));
  for (int i = 0; i < n; ++i) {
    Vec& f = task.grid.features[i];
    int r = i / w, c = i % w;
    for (int ch = 0; ch < d; ++ch) {
      switch (ch) {
        case 0: f[ch] = wts[i] + 0.02 * rng_feat.gaussian(); break;
        case 1: f[ch] = (is_pair[i] ? 1.0 : 0.0) + 0.05 * rng_feat.gaussian(); break;
        case 2: f[ch] = (is_crit[i] ? 1.0 : 0.0) + 0.05 * rng_feat.gaussian(); break;
        case 3: f[ch] = h > 1 ? static_cast<double>(r) / (h - 1) - 0.5 : 0.0; break;
        case 4: f[ch] = w > 1 ? static_cast<double>(c) / (w - 1) - 0.5 : 0.0; break;
        case 5: f[ch] = 0.5 * heur_z[i]; break;
        default: f[ch] = 0.5 * rng_feat.gaussian(); break;
      }
    }
  }

  ok = structural_checks_pass(task) && curve_matches_level(task);
  return task;
}

}  // namespace

const char* level_name(Level level) {
  switch (level) {
    case Level::LV1: return "LV1";
    case Level::LV2: return "LV2";
    case Level::LV3: return "LV3";
  }
  fail("level_name: bad level");
}

Level level_from_name(const std::string& name) {
  if (name == "LV1") return Level::LV1;
  if (name == "LV2") return Level::LV2;
  if (name == "LV3") return Level::LV3;
  fail("level_from_name: unknown level '" + name + "'");
}

TaskOutcome evaluate(const SyntheticTask& task, const RetentionMask& mask) {
  const OracleSpec& o = task.oracle;
  int n = task.grid.tokens();
  require(n >= 1, "evaluate: empty grid");
  require(mask.size() == n, "evaluate: mask size != token count");
  require(static_cast<int>(o.importance_weights.size()) == n,
          "evaluate: weight table size != token count");
  double tau = o.decision_threshold;
  require(tau > 0.0, "evaluate: decision threshold must be positive");
  require(o.num_classes >= 2, "evaluate: need at least two classes");
  require(task.label >= 0 && task.label < o.num_classes, "evaluate: label out of range");

  double total_mass = 0.0;
  double signal = 0.0;
  for (int i = 0; i < n; ++i) {
    total_mass += o.importance_weights[i];
    if (mask.get(i)) signal += o.importance_weights[i];
  }
  double cliff = 4.0 * tau;
  for (int c : o.critical_set) {
    require(c >= 0 && c < n, "evaluate: critical index out of range");
    if (!mask.get(c)) signal -= cliff;
  }
  double bonus_total = 0.0;
  for (const auto& pair : o.misleading_pairs) {
    require(pair.a >= 0 && pair.a < n && pair.b >= 0 && pair.b < n,
            "evaluate: pair index out of range");
    bonus_total += std::abs(pair.bonus);
    if (!mask.get(pair.a) && !mask.get(pair.b)) signal += pair.bonus;
  }

  double scale = 4.0 / tau;
  double margin = signal - tau;
  int classes = o.num_classes;
  int anti = (task.label + 1) % classes;
  // Distractor constants sit strictly below max(margin, -margin) * scale for
  // every reachable signal, so the decision always rests on the margin pair.
  double cap = scale * (tau + cliff * o.critical_set.size() + bonus_total + total_mass) + 1.0;

  TaskOutcome out;
  out.logits.assign(classes, 0.0);
  for (int k = 0; k < classes; ++k) out.logits[k] = -cap * (1.0 + 0.1 * k);
  out.logits[task.label] = scale * margin;
  out.logits[anti] = -scale * margin;

  out.predicted = 0;
  for (int k = 1; k < classes; ++k)
    if (out.logits[k] > out.logits[out.predicted]) out.predicted = k;
  out.correct = out.predicted == task.label;
  out.loss = cross_entropy(out.logits, task.label);
  return out;
}

TeacherOutput teacher_evaluate(const SyntheticTask& task) {
  int n = task.grid.tokens();
  require(n >= 1, "teacher_evaluate: empty grid");
  TeacherOutput out;
  out.logits = evaluate(task, RetentionMask::ones(n)).logits;
  out.pooled_feature.assign(task.grid.feature_dim, 0.0);
  for (const Vec& f : task.grid.features)
    for (int ch = 0; ch < task.grid.feature_dim; ++ch) out.pooled_feature[ch] += f[ch];
  for (double& v : out.pooled_feature) v /= n;
  return out;
}

SyntheticTask generate_task(Level level, int height, int width, int feature_dim,
                            uint64_t seed) {
  require(height >= 1 && width >= 1 && height * width >= 4,
          "generate_task: grid must hold at least 4 tokens");
  require(feature_dim >= 2, "generate_task: feature_dim must be >= 2");
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    bool ok = false;
    SyntheticTask task = generate_attempt(level, height, width, feature_dim, seed,
                                          attempt, ok);
    if (ok) return task;
  }
  fail("generate_task: construction failed for level " +
       std::string(level_name(level)) + " after " + std::to_string(kMaxAttempts) +
       " attempts (seed " + std::to_string(seed) + ")");
}

std::vector<SyntheticTask> generate_suite(const SuiteSpec& spec) {
  require(spec.count_lv1 >= 0 && spec.count_lv2 >= 0 && spec.count_lv3 >= 0,
          "generate_suite: negative count");
  std::vector<SyntheticTask> tasks;
  SeededRng master(spec.master_seed);
  auto emit = [&](Level level, int count) {
    SeededRng stream = master.split(level_name(level));
    for (int i = 0; i < count; ++i) {
      SyntheticTask task = generate_task(level, spec.height, spec.width,
                                         spec.feature_dim, stream.split(i).state());
      task.oracle.task_mode = spec.task_mode;
      tasks.push_back(std::move(task));
    }
  };
  emit(Level::LV1, spec.count_lv1);
  emit(Level::LV2, spec.count_lv2);
  emit(Level::LV3, spec.count_lv3);
  return tasks;
}

RetentionMask heuristic_topk(const SyntheticTask& task, int kept) {
  int n = task.grid.tokens();
  require(kept >= 0 && kept <= n, "heuristic_topk: kept out of range");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return task.grid.heuristic_scores[a] > task.grid.heuristic_scores[b];
  });
  RetentionMask mask = RetentionMask::zeros(n);
  for (int i = 0; i < kept; ++i) mask.set(order[i], true);
  return mask;
}

RetentionMask brute_force_optimal(const SyntheticTask& task, int max_kept) {
  int n = task.grid.tokens();
  require(max_kept >= 0 && max_kept <= n, "brute_force_optimal: budget out of range");

  double best_loss = 0.0;
  bool have_best = false;
  RetentionMask best = RetentionMask::zeros(n);
  auto consider = [&](const RetentionMask& m) {
    double loss = evaluate(task, m).loss;
    if (!have_best || loss < best_loss ||
        (loss == best_loss && std::lexicographical_compare(m.bits.begin(), m.bits.end(),
                                                           best.bits.begin(),
                                                           best.bits.end()))) {
      best_loss = loss;
      best = m;
      have_best = true;
    }
  };

  if (n <= 20) {
    // Ascending code order is lexicographic order of the bit sequence when
    // bit 0 is the most significant digit, so ties resolve automatically.
    for (uint32_t code = 0; code < (1u << n); ++code) {
      if (std::popcount(code) > max_kept) continue;
      RetentionMask m = RetentionMask::zeros(n);
      for (int i = 0; i < n; ++i)
        if ((code >> (n - 1 - i)) & 1u) m.set(i, true);
      consider(m);
    }
    return best;
  }
  if (max_kept <= 3 && n <= 64) {
    consider(RetentionMask::zeros(n));
    for (int i = 0; i < n && max_kept >= 1; ++i) {
      RetentionMask m1 = RetentionMask::zeros(n);
      m1.set(i, true);
      consider(m1);
      for (int j = i + 1; j < n && max_kept >= 2; ++j) {
        RetentionMask m2 = m1;
        m2.set(j, true);
        consider(m2);
        for (int k = j + 1; k < n && max_kept >= 3; ++k) {
          RetentionMask m3 = m2;
          m3.set(k, true);
          consider(m3);
        }
      }
    }
    return best;
  }
  fail("brute_force_optimal: instance too large (N <= 20, or kept budget <= 3 with N <= 64)");
}

namespace {

using nlohmann::json;

json task_to_json_obj(const SyntheticTask& task) {
  json j;
  j["format_version"] = 1;
  j["height"] = task.grid.height;
  j["width"] = task.grid.width;
  j["feature_dim"] = task.grid.feature_dim;
  j["seed"] = task.seed;
  j["level"] = level_name(task.difficulty);
  j["label"] = task.label;
  j["num_classes"] = task.oracle.num_classes;
  j["task_mode"] = task.oracle.task_mode == TaskMode::verifiable ? "verifiable" : "open_ended";
  j["tau"] = task.oracle.decision_threshold;
  j["importance_weights"] = task.oracle.importance_weights;
  j["critical_set"] = task.oracle.critical_set;
  json pairs = json::array();
  for (const auto& p : task.oracle.misleading_pairs)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"bonus", p.bonus}});
  j["misleading_pairs"] = pairs;
  j["heuristic_scores"] = task.grid.heuristic_scores;
  j["features"] = task.grid.features;
  return j;
}

}  // namespace

std::string task_to_json(const SyntheticTask& task) {
  return task_to_json_obj(task).dump(2);
}

SyntheticTask task_from_json(const std::string& text) {
  json j = json::parse(text);
  require(j.at("format_version").get<int>() == 1,
          "task_from_json: unsupported format_version");
  SyntheticTask task;
  task.grid.height = j.at("height").get<int>();
  task.grid.width = j.at("width").get<int>();
  task.grid.feature_dim = j.at("feature_dim").get<int>();
  task.seed = j.at("seed").get<uint64_t>();
  task.difficulty = level_from_name(j.at("level").get<std::string>());
  task.label = j.at("label").get<int>();
  task.oracle.num_classes = j.at("num_classes").get<int>();
  task.oracle.task_mode = j.at("task_mode").get<std::string>() == "open_ended"
                              ? TaskMode::open_ended
                              : TaskMode::verifiable;
  task.oracle.decision_threshold = j.at("tau").get<double>();
  task.oracle.importance_weights = j.at("importance_weights").get<Vec>();
  task.oracle.critical_set = j.at("critical_set").get<std::vector<int>>();
  for (const auto& p : j.at("misleading_pairs")) {
    task.oracle.misleading_pairs.push_back(
        {p.at("a").get<int>(), p.at("b").get<int>(), p.at("bonus").get<double>()});
  }
  task.grid.heuristic_scores = j.at("heuristic_scores").get<Vec>();
  task.grid.features = j.at("features").get<std::vector<Vec>>();
  int n = task.grid.tokens();
  require(static_cast<int>(task.grid.features.size()) == n,
          "task_from_json: feature row count != token count");
  require(static_cast<int>(task.grid.heuristic_scores.size()) == n,
          "task_from_json: heuristic score count != token count");
  require(static_cast<int>(task.oracle.importance_weights.size()) == n,
          "task_from_json: weight count != token count");
  return task;
}

}  // namespace grip
