#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "grip/common.hpp"

namespace grip::cli {

namespace {

using nlohmann::json;

// Pulls a value out of `j` while recording the key as consumed; the caller
// verifies nothing was left over.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j_.is_object(), where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(where_ + "." + key + ": " + e.what());
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key()))
        fail(where_ + ": unknown key \"" + it.key() + "\"");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

const char* task_mode_name(TaskMode mode) {
  return mode == TaskMode::verifiable ? "verifiable" : "open_ended";
}

TaskMode task_mode_from_name(const std::string& name) {
  if (name == "verifiable") return TaskMode::verifiable;
  if (name == "open_ended") return TaskMode::open_ended;
  fail("unknown task mode \"" + name + "\" (expected verifiable or open_ended)");
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.suite.count_lv1 = 100;
  c.suite.count_lv2 = 100;
  c.suite.count_lv3 = 100;
  c.suite.height = 8;
  c.suite.width = 8;
  c.suite.feature_dim = 8;
  c.suite.master_seed = 20260816;
  c.suite.task_mode = TaskMode::verifiable;
  c.sft.epochs = 40;
  c.sft.seed = 11;
  c.sft_curriculum_ratios = {{0, 1.0}, {10, 0.75}, {20, 0.5}};
  c.grpo.iterations = 0;
  c.grpo.seed = 12;
  return c;
}

namespace {

std::vector<std::pair<int, double>> curriculum_or_default(const ExperimentConfig& c) {
  if (!c.sft_curriculum_ratios.empty()) return c.sft_curriculum_ratios;
  return {{0, c.budget_keep_ratio}};
}

}  // namespace

BudgetSpec ExperimentConfig::sft_base_budget() const {
  double max_ratio = 0.0;
  for (const auto& [epoch, ratio] : curriculum_or_default(*this))
    max_ratio = std::max(max_ratio, ratio);
  return BudgetSpec::single_stage(suite.height * suite.width, max_ratio, budget_layers);
}

SftConfig ExperimentConfig::resolved_sft() const {
  SftConfig out = sft;
  out.curriculum.clear();
  int n0 = suite.height * suite.width;
  for (const auto& [epoch, ratio] : curriculum_or_default(*this)) {
    require(ratio > 0.0 && ratio <= 1.0,
            "sft.curriculum: keep ratios must lie in (0, 1]");
    out.curriculum.emplace_back(epoch, ratio * n0 * budget_layers);
  }
  return out;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c = default_config();
  StrictObject root(j, "config");

  int version = kConfigVersion;
  root.get("config_version", version);
  if (version != kConfigVersion)
    fail("config_version mismatch: this build reads version " +
         std::to_string(kConfigVersion) + ", file declares version " +
         std::to_string(version));

  root.get("out_dir", c.out_dir);
  root.get("threads", c.threads);
  require(c.threads >= 1, "threads must be >= 1");

  if (root.has("suite")) {
    StrictObject s(root.raw("suite"), "suite");
    s.get("count_lv1", c.suite.count_lv1);
    s.get("count_lv2", c.suite.count_lv2);
    s.get("count_lv3", c.suite.count_lv3);
    s.get("height", c.suite.height);
    s.get("width", c.suite.width);
    s.get("feature_dim", c.suite.feature_dim);
    s.get("master_seed", c.suite.master_seed);
    std::string mode = task_mode_name(c.suite.task_mode);
    s.get("task_mode", mode);
    c.suite.task_mode = task_mode_from_name(mode);
    s.finish();
  }

  if (root.has("scorer")) {
    StrictObject s(root.raw("scorer"), "scorer");
    s.get("hidden", c.scorer_hidden);
    s.get("init_seed", c.scorer_init_seed);
    s.get("disable_film_modulator", c.scorer_options.disable_film_modulator);
    s.get("disable_heuristic_fusion", c.scorer_options.disable_heuristic_fusion);
    s.finish();
    require(c.scorer_hidden >= 1, "scorer.hidden must be >= 1");
  }

  if (root.has("budget")) {
    StrictObject s(root.raw("budget"), "budget");
    s.get("keep_ratio", c.budget_keep_ratio);
    s.get("layers", c.budget_layers);
    s.finish();
    require(c.budget_keep_ratio > 0.0 && c.budget_keep_ratio <= 1.0,
            "budget.keep_ratio must lie in (0, 1]");
    require(c.budget_layers >= 1, "budget.layers must be >= 1");
  }

  if (root.has("sft")) {
    StrictObject s(root.raw("sft"), "sft");
    s.get("alpha_kl", c.sft.alpha_kl);
    s.get("beta_ratio", c.sft.beta_ratio);
    s.get("epochs", c.sft.epochs);
    s.get("learning_rate", c.sft.learning_rate);
    s.get("batch_size", c.sft.batch_size);
    s.get("seed", c.sft.seed);
    if (s.has("curriculum")) {
      const json& cur = s.raw("curriculum");
      require(cur.is_array(), "sft.curriculum: expected an array of [epoch, keep_ratio]");
      c.sft_curriculum_ratios.clear();
      for (const json& entry : cur) {
        require(entry.is_array() && entry.size() == 2,
                "sft.curriculum: each entry is [epoch, keep_ratio]");
        c.sft_curriculum_ratios.emplace_back(entry.at(0).get<int>(),
                                             entry.at(1).get<double>());
      }
    }
    s.finish();
  }

  if (root.has("grpo")) {
    StrictObject s(root.raw("grpo"), "grpo");
    s.get("group_size", c.grpo.group_size);
    s.get("clip_eps", c.grpo.clip_eps);
    s.get("kl_coeff", c.grpo.kl_coeff);
    s.get("budget_penalty", c.grpo.budget_penalty);
    s.get("reward_scale", c.grpo.reward_scale);
    s.get("iterations", c.grpo.iterations);
    s.get("learning_rate", c.grpo.learning_rate);
    s.get("batch_tasks", c.grpo.batch_tasks);
    s.get("disable_hybrid_reward", c.grpo.disable_hybrid_reward);
    s.get("seed", c.grpo.seed);
    s.finish();
  }

  if (root.has("eval")) {
    StrictObject s(root.raw("eval"), "eval");
    s.get("keep_ratios", c.eval_keep_ratios);
    s.get("partition_m", c.eval_partition_m);
    s.finish();
    require(!c.eval_keep_ratios.empty(), "eval.keep_ratios must not be empty");
    for (double r : c.eval_keep_ratios)
      require(r > 0.0 && r <= 1.0, "eval.keep_ratios must lie in (0, 1]");
    require(c.eval_partition_m >= 1, "eval.partition_m must be >= 1");
  }

  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("cannot parse config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  json cur = json::array();
  for (const auto& [epoch, ratio] : c.sft_curriculum_ratios)
    cur.push_back(json::array({epoch, ratio}));
  return json{
      {"config_version", kConfigVersion},
      {"out_dir", c.out_dir},
      {"threads", c.threads},
      {"suite",
       {{"count_lv1", c.suite.count_lv1},
        {"count_lv2", c.suite.count_lv2},
        {"count_lv3", c.suite.count_lv3},
        {"height", c.suite.height},
        {"width", c.suite.width},
        {"feature_dim", c.suite.feature_dim},
        {"master_seed", c.suite.master_seed},
        {"task_mode", task_mode_name(c.suite.task_mode)}}},
      {"scorer",
       {{"hidden", c.scorer_hidden},
        {"init_seed", c.scorer_init_seed},
        {"disable_film_modulator", c.scorer_options.disable_film_modulator},
        {"disable_heuristic_fusion", c.scorer_options.disable_heuristic_fusion}}},
      {"budget", {{"keep_ratio", c.budget_keep_ratio}, {"layers", c.budget_layers}}},
      {"sft",
       {{"alpha_kl", c.sft.alpha_kl},
        {"beta_ratio", c.sft.beta_ratio},
        {"epochs", c.sft.epochs},
        {"learning_rate", c.sft.learning_rate},
        {"batch_size", c.sft.batch_size},
        {"seed", c.sft.seed},
        {"curriculum", cur}}},
      {"grpo",
       {{"group_size", c.grpo.group_size},
        {"clip_eps", c.grpo.clip_eps},
        {"kl_coeff", c.grpo.kl_coeff},
        {"budget_penalty", c.grpo.budget_penalty},
        {"reward_scale", c.grpo.reward_scale},
        {"iterations", c.grpo.iterations},
        {"learning_rate", c.grpo.learning_rate},
        {"batch_tasks", c.grpo.batch_tasks},
        {"disable_hybrid_reward", c.grpo.disable_hybrid_reward},
        {"seed", c.grpo.seed}}},
      {"eval",
       {{"keep_ratios", c.eval_keep_ratios}, {"partition_m", c.eval_partition_m}}}};
}

}  // namespace grip::cli
