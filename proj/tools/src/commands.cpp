#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "grip/analysis.hpp"
#include "grip/checkpoint.hpp"
#include "grip/common.hpp"
#include "grip/credit.hpp"
#include "grip/grpo.hpp"
#include "grip/sft.hpp"
#include "run_io.hpp"

namespace grip::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string tasks_dir(const ExperimentConfig& c) {
  return (fs::path(c.out_dir) / "tasks").string();
}
std::string checkpoints_dir(const ExperimentConfig& c) {
  return (fs::path(c.out_dir) / "checkpoints").string();
}
std::string results_dir(const ExperimentConfig& c) {
  return (fs::path(c.out_dir) / "results").string();
}

json parse_json_file(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("cannot parse ") + path + ": " + e.what());
  }
}

void check_format_version(const json& j, const std::string& path) {
  if (!j.contains("format_version")) fail(path + ": missing format_version field");
  int found = j.at("format_version").get<int>();
  if (found != kArtifactVersion)
    fail(path + ": format_version mismatch: this build reads version " +
         std::to_string(kArtifactVersion) + ", the file declares version " +
         std::to_string(found));
}

void check_suite_field(const std::string& path, const char* key, int in_index,
                       int in_config) {
  if (in_index != in_config)
    fail(path + ": suite was generated with " + key + " = " + std::to_string(in_index) +
         " but the config says " + std::to_string(in_config) +
         "; regenerate the suite or fix the config");
}

std::vector<SyntheticTask> load_suite(const ExperimentConfig& c) {
  std::string dir = tasks_dir(c);
  std::string index_path = (fs::path(dir) / "index.json").string();
  if (!file_exists(index_path))
    fail("no task suite at " + index_path + "; run generate-suite first");
  json index = parse_json_file(index_path);
  check_format_version(index, index_path);
  check_suite_field(index_path, "height", index.at("height").get<int>(), c.suite.height);
  check_suite_field(index_path, "width", index.at("width").get<int>(), c.suite.width);
  check_suite_field(index_path, "feature_dim", index.at("feature_dim").get<int>(),
                    c.suite.feature_dim);

  std::vector<SyntheticTask> out;
  for (const json& entry : index.at("entries")) {
    std::string file = entry.at("file").get<std::string>();
    std::string full = (fs::path(dir) / file).string();
    try {
      out.push_back(task_from_json(read_file(full)));
    } catch (const std::exception& e) {
      fail("cannot load task " + full + ": " + e.what());
    }
  }
  return out;
}

ScorerParams load_scorer(const ExperimentConfig& c, const std::string& path) {
  if (!file_exists(path))
    fail("no checkpoint at " + path + "; run train first or pass --checkpoint");
  ScorerParams params = load_checkpoint(path);
  if (params.feature_dim != c.suite.feature_dim)
    fail("checkpoint " + path + " was trained on feature_dim = " +
         std::to_string(params.feature_dim) + " but the config suite uses " +
         std::to_string(c.suite.feature_dim));
  return params;
}

int topk_count(double ratio, int n) {
  long long k = std::llround(ratio * n);
  if (k < 1) k = 1;
  if (k > n) k = n;
  return static_cast<int>(k);
}

constexpr const char* kLevelNames[3] = {"LV1", "LV2", "LV3"};

// Sums of one method's per-task measurements, split by difficulty level
// (slots 0..2) with the overall aggregate in slot 3.
struct EvalBucket {
  int count = 0;
  int correct = 0;
  double t_eq = 0.0;
  double flop = 0.0;
  double mcr = 0.0;
  double entropy = 0.0;
};

struct TaskMeasure {
  int level = 0;
  bool correct = false;
  double t_eq = 0.0;
  double flop = 0.0;
  double mcr = 0.0;
  double entropy = 0.0;
};

std::array<EvalBucket, 4> bucket_measures(const std::vector<TaskMeasure>& measures) {
  std::array<EvalBucket, 4> buckets{};
  for (const TaskMeasure& m : measures) {
    for (int slot : {m.level, 3}) {
      EvalBucket& b = buckets[static_cast<size_t>(slot)];
      b.count += 1;
      b.correct += m.correct ? 1 : 0;
      b.t_eq += m.t_eq;
      b.flop += m.flop;
      b.mcr += m.mcr;
      b.entropy += m.entropy;
    }
  }
  return buckets;
}

std::string bucket_stat(const EvalBucket& b, double EvalBucket::*field, int precision) {
  if (b.count == 0) return "";
  return fmt_double((b.*field) / b.count, precision);
}

std::string bucket_accuracy(const EvalBucket& b, int precision = 4) {
  if (b.count == 0) return "";
  return fmt_double(static_cast<double>(b.correct) / b.count, precision);
}

json bucket_json(double keep_ratio, const std::string& method, int slot,
                 const EvalBucket& b) {
  json rec{{"keep_ratio", keep_ratio},
           {"method", method},
           {"level", slot == 3 ? "all" : kLevelNames[slot]},
           {"count", b.count},
           {"correct", b.correct}};
  if (b.count > 0) {
    rec["accuracy"] = static_cast<double>(b.correct) / b.count;
    rec["mean_t_eq_realized"] = b.t_eq / b.count;
    rec["mean_flop_proxy"] = b.flop / b.count;
    rec["mean_max_component_ratio"] = b.mcr / b.count;
    rec["mean_spatial_entropy"] = b.entropy / b.count;
  } else {
    rec["accuracy"] = nullptr;
    rec["mean_t_eq_realized"] = nullptr;
    rec["mean_flop_proxy"] = nullptr;
    rec["mean_max_component_ratio"] = nullptr;
    rec["mean_spatial_entropy"] = nullptr;
  }
  return rec;
}

std::vector<TaskMeasure> measure_policy(const ExperimentConfig& c,
                                        const std::vector<SyntheticTask>& tasks,
                                        const SelectionPolicy& policy, double ratio) {
  int n0 = c.suite.height * c.suite.width;
  BudgetSpec budget = BudgetSpec::single_stage(n0, ratio, c.budget_layers);
  int k = topk_count(ratio, n0);
  std::vector<TaskMeasure> measures(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), c.threads, [&](int i) {
    const SyntheticTask& task = tasks[static_cast<size_t>(i)];
    RetentionMask mask = policy(task, k);
    TaskOutcome outcome = evaluate(task, mask);
    GranularityReport gran = granularity_report(mask, c.suite.height, c.suite.width,
                                                c.eval_partition_m);
    TaskMeasure& m = measures[static_cast<size_t>(i)];
    m.level = static_cast<int>(task.difficulty);
    m.correct = outcome.correct;
    m.t_eq = rollout_equivalent_tokens(budget, mask.kept);
    m.flop = flop_proxy(budget, {mask.kept});
    m.mcr = gran.max_component_ratio;
    m.entropy = gran.spatial_entropy;
  });
  return measures;
}

}  // namespace

std::string default_checkpoint(const ExperimentConfig& c) {
  return (fs::path(checkpoints_dir(c)) / "rl.ckpt").string();
}

int cmd_generate_suite(const ExperimentConfig& c) {
  double t0 = now_seconds();
  int total = c.suite.count_lv1 + c.suite.count_lv2 + c.suite.count_lv3;
  if (total == 0)
    std::cerr << "warning: all level counts are zero; writing an empty suite\n";

  std::vector<SyntheticTask> tasks = generate_suite(c.suite);
  std::string dir = tasks_dir(c);
  ensure_dir(dir);

  json entries = json::array();
  std::vector<std::string> artifacts;
  for (size_t i = 0; i < tasks.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "task_%05zu.json", i);
    write_file((fs::path(dir) / name).string(), task_to_json(tasks[i]));
    entries.push_back({{"file", name},
                       {"level", level_name(tasks[i].difficulty)},
                       {"seed", tasks[i].seed},
                       {"label", tasks[i].label}});
    artifacts.push_back((fs::path("tasks") / name).string());
  }

  json index{{"format_version", kArtifactVersion},
             {"count", static_cast<int>(tasks.size())},
             {"height", c.suite.height},
             {"width", c.suite.width},
             {"feature_dim", c.suite.feature_dim},
             {"task_mode", task_mode_name(c.suite.task_mode)},
             {"master_seed", c.suite.master_seed},
             {"entries", entries}};
  write_file((fs::path(dir) / "index.json").string(), index.dump(2) + "\n");
  artifacts.insert(artifacts.begin(), (fs::path("tasks") / "index.json").string());

  write_manifest(c.out_dir, "generate-suite", config_to_json(c), artifacts);
  write_timings(c.out_dir, "generate-suite", {{"generate", now_seconds() - t0}});

  std::vector<std::vector<std::string>> rows = {
      {"LV1", std::to_string(c.suite.count_lv1)},
      {"LV2", std::to_string(c.suite.count_lv2)},
      {"LV3", std::to_string(c.suite.count_lv3)},
      {"total", std::to_string(total)}};
  std::cout << render_table({"level", "tasks"}, rows);
  std::cout << "wrote " << tasks.size() << " tasks to " << dir << "\n";
  return 0;
}

int cmd_train(const ExperimentConfig& c) {
  std::vector<SyntheticTask> tasks = load_suite(c);
  require(!tasks.empty(), "task suite in " + tasks_dir(c) + " is empty; nothing to train on");

  ensure_dir(checkpoints_dir(c));
  ensure_dir(results_dir(c));
  json snapshot = config_to_json(c);

  SeededRng init_rng(c.scorer_init_seed);
  ScorerParams initial =
      ScorerParams::init(c.suite.feature_dim, c.scorer_hidden, init_rng);

  // Stage one. Its artifacts are flushed before stage two starts, so a GRPO
  // failure leaves the distilled checkpoint usable on disk.
  double t0 = now_seconds();
  SftResult sft =
      train_sft(tasks, c.resolved_sft(), initial, c.sft_base_budget(), c.scorer_options);
  double sft_seconds = now_seconds() - t0;

  std::string sft_ckpt = (fs::path(checkpoints_dir(c)) / "sft.ckpt").string();
  save_checkpoint(sft_ckpt, sft.params);
  json sft_sidecar{{"format_version", kArtifactVersion},
                   {"stage", "sft"},
                   {"feature_dim", sft.params.feature_dim},
                   {"hidden", sft.params.hidden},
                   {"config", snapshot}};
  write_file(sft_ckpt + ".json", sft_sidecar.dump(2) + "\n");

  JsonlDoc sft_log("sft_log");
  for (const SftEpochLog& e : sft.log)
    sft_log.add({{"epoch", e.epoch},
                 {"t_eq_target", e.t_eq_target},
                 {"l_distill", e.l_distill},
                 {"l_kl", e.l_kl},
                 {"l_ratio", e.l_ratio},
                 {"total", e.total},
                 {"mean_accuracy", e.mean_accuracy}});
  std::string sft_log_path = (fs::path(results_dir(c)) / "sft_log.jsonl").string();
  sft_log.save(sft_log_path);

  // Stage two. Zero iterations is the documented identity: the RL checkpoint
  // is the SFT checkpoint, byte for byte.
  double t1 = now_seconds();
  ScorerParams rl_params = sft.params;
  std::vector<GrpoIterLog> rl_log;
  if (c.grpo.iterations > 0) {
    GrpoResult rl = train_grpo(tasks, c.grpo, sft.params, c.train_budget(), c.scorer_options);
    rl_params = rl.params;
    rl_log = rl.log;
  }
  double rl_seconds = now_seconds() - t1;

  std::string rl_ckpt = (fs::path(checkpoints_dir(c)) / "rl.ckpt").string();
  save_checkpoint(rl_ckpt, rl_params);
  json rl_sidecar{{"format_version", kArtifactVersion},
                  {"stage", "rl"},
                  {"feature_dim", rl_params.feature_dim},
                  {"hidden", rl_params.hidden},
                  {"config", snapshot}};
  write_file(rl_ckpt + ".json", rl_sidecar.dump(2) + "\n");

  JsonlDoc rl_jsonl("grpo_log");
  for (const GrpoIterLog& it : rl_log)
    rl_jsonl.add({{"iteration", it.iteration},
                  {"reward_mean", it.reward_mean},
                  {"reward_min", it.reward_min},
                  {"reward_max", it.reward_max},
                  {"kl_mean", it.kl_mean},
                  {"clip_fraction", it.clip_fraction},
                  {"t_eq_mean", it.t_eq_mean},
                  {"accuracy", it.accuracy},
                  {"objective", it.objective},
                  {"grad_norm", it.grad_norm}});
  std::string rl_log_path = (fs::path(results_dir(c)) / "grpo_log.jsonl").string();
  rl_jsonl.save(rl_log_path);

  write_manifest(c.out_dir, "train", snapshot,
                 {"checkpoints/sft.ckpt", "checkpoints/sft.ckpt.json",
                  "checkpoints/rl.ckpt", "checkpoints/rl.ckpt.json",
                  "results/sft_log.jsonl", "results/grpo_log.jsonl"});
  write_timings(c.out_dir, "train",
                {{"sft", sft_seconds}, {"grpo", rl_seconds},
                 {"total", sft_seconds + rl_seconds}});

  std::vector<std::vector<std::string>> rows;
  if (sft.log.empty()) {
    rows.push_back({"sft", "0", "", ""});
  } else {
    rows.push_back({"sft", std::to_string(sft.log.size()),
                    fmt_double(sft.log.back().total, 6),
                    fmt_double(sft.log.back().mean_accuracy, 4)});
  }
  if (rl_log.empty()) {
    rows.push_back({"grpo", "0", "", ""});
  } else {
    rows.push_back({"grpo", std::to_string(rl_log.size()),
                    fmt_double(rl_log.back().reward_mean, 6),
                    fmt_double(rl_log.back().accuracy, 4)});
  }
  std::cout << render_table({"stage", "steps", "final_loss_or_reward", "final_accuracy"},
                            rows);
  std::cout << "checkpoints in " << checkpoints_dir(c) << ", logs in " << results_dir(c)
            << "\n";
  return 0;
}

int cmd_evaluate(const ExperimentConfig& c, const std::string& checkpoint) {
  double t0 = now_seconds();
  std::vector<SyntheticTask> tasks = load_suite(c);
  require(!tasks.empty(), "task suite in " + tasks_dir(c) + " is empty; nothing to evaluate");
  ScorerParams params = load_scorer(c, checkpoint);

  SelectionPolicy scorer_policy = make_scorer_policy(params, c.scorer_options);
  SelectionPolicy heuristic_policy = make_heuristic_policy();

  CsvDoc csv({"keep_ratio", "method", "level", "count", "correct", "accuracy",
              "mean_t_eq_realized", "mean_flop_proxy", "mean_max_component_ratio",
              "mean_spatial_entropy"});
  JsonlDoc jsonl("evaluate");
  std::vector<std::vector<std::string>> table;

  for (double ratio : c.eval_keep_ratios) {
    struct MethodMeasures {
      const char* name;
      std::vector<TaskMeasure> measures;
    };
    MethodMeasures methods[2] = {
        {"scorer", measure_policy(c, tasks, scorer_policy, ratio)},
        {"heuristic", measure_policy(c, tasks, heuristic_policy, ratio)}};

    for (const MethodMeasures& m : methods) {
      std::array<EvalBucket, 4> buckets = bucket_measures(m.measures);
      for (int slot : {3, 0, 1, 2}) {
        const EvalBucket& b = buckets[static_cast<size_t>(slot)];
        std::string level = slot == 3 ? "all" : kLevelNames[slot];
        csv.add({fmt_double(ratio, 4), m.name, level, std::to_string(b.count),
                 std::to_string(b.correct), bucket_accuracy(b),
                 bucket_stat(b, &EvalBucket::t_eq, 2), bucket_stat(b, &EvalBucket::flop, 1),
                 bucket_stat(b, &EvalBucket::mcr, 4),
                 bucket_stat(b, &EvalBucket::entropy, 4)});
        jsonl.add(bucket_json(ratio, m.name, slot, b));
      }
      const EvalBucket& all = buckets[3];
      auto level_cell = [&](int slot) {
        return bucket_accuracy(buckets[static_cast<size_t>(slot)], 3);
      };
      table.push_back({m.name, fmt_double(ratio, 2), bucket_accuracy(all, 3),
                       level_cell(0), level_cell(1), level_cell(2),
                       bucket_stat(all, &EvalBucket::t_eq, 1),
                       bucket_stat(all, &EvalBucket::flop, 0),
                       bucket_stat(all, &EvalBucket::mcr, 3),
                       bucket_stat(all, &EvalBucket::entropy, 3)});
    }
  }

  ensure_dir(results_dir(c));
  std::string csv_path = (fs::path(results_dir(c)) / "eval.csv").string();
  std::string jsonl_path = (fs::path(results_dir(c)) / "eval.jsonl").string();
  csv.save(csv_path);
  jsonl.save(jsonl_path);
  write_manifest(c.out_dir, "evaluate", config_to_json(c),
                 {"results/eval.csv", "results/eval.jsonl"});
  write_timings(c.out_dir, "evaluate", {{"evaluate", now_seconds() - t0}});

  std::cout << render_table({"method", "ratio", "acc", "LV1", "LV2", "LV3", "t_eq",
                             "flop", "mcr", "entropy"},
                            table);
  std::cout << "results in " << csv_path << " and " << jsonl_path << "\n";
  return 0;
}

int cmd_classify_difficulty(const ExperimentConfig& c) {
  double t0 = now_seconds();
  std::vector<SyntheticTask> tasks = load_suite(c);
  require(!tasks.empty(), "task suite in " + tasks_dir(c) + " is empty; nothing to classify");

  std::vector<double> grid = default_curve_ratios();
  SelectionPolicy policy = make_heuristic_policy();
  struct Row {
    Level assigned = Level::LV1;
    int transitions = 0;
  };
  std::vector<Row> rows(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), c.threads, [&](int i) {
    DifficultyProfile profile = correctness_curve(policy, tasks[static_cast<size_t>(i)], grid);
    rows[static_cast<size_t>(i)] = {classify_difficulty(profile), profile.transitions};
  });

  CsvDoc csv({"task", "generated_level", "classified_level", "transitions"});
  JsonlDoc jsonl("difficulty");
  int confusion[3][3] = {};
  for (size_t i = 0; i < tasks.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "task_%05zu.json", i);
    int gen = static_cast<int>(tasks[i].difficulty);
    int cls = static_cast<int>(rows[i].assigned);
    confusion[gen][cls] += 1;
    csv.add({name, level_name(tasks[i].difficulty), level_name(rows[i].assigned),
             std::to_string(rows[i].transitions)});
    jsonl.add({{"task", name},
               {"generated_level", level_name(tasks[i].difficulty)},
               {"classified_level", level_name(rows[i].assigned)},
               {"transitions", rows[i].transitions}});
  }

  ensure_dir(results_dir(c));
  std::string csv_path = (fs::path(results_dir(c)) / "difficulty.csv").string();
  std::string jsonl_path = (fs::path(results_dir(c)) / "difficulty.jsonl").string();
  csv.save(csv_path);
  jsonl.save(jsonl_path);
  write_manifest(c.out_dir, "classify-difficulty", config_to_json(c),
                 {"results/difficulty.csv", "results/difficulty.jsonl"});
  write_timings(c.out_dir, "classify-difficulty", {{"classify", now_seconds() - t0}});

  std::vector<std::vector<std::string>> table;
  int agree = 0;
  for (int g = 0; g < 3; ++g) {
    table.push_back({kLevelNames[g], std::to_string(confusion[g][0]),
                     std::to_string(confusion[g][1]), std::to_string(confusion[g][2])});
    agree += confusion[g][g];
  }
  std::cout << render_table({"generated \\ classified", "LV1", "LV2", "LV3"}, table);
  std::cout << "agreement " << agree << "/" << tasks.size() << "\n";
  return 0;
}

int cmd_granularity(const ExperimentConfig& c, const std::string& checkpoint,
                    double keep_ratio) {
  require(keep_ratio > 0.0 && keep_ratio <= 1.0, "keep ratio must lie in (0, 1]");
  double t0 = now_seconds();
  std::vector<SyntheticTask> tasks = load_suite(c);
  require(!tasks.empty(), "task suite in " + tasks_dir(c) + " is empty");
  ScorerParams params = load_scorer(c, checkpoint);

  struct MethodMeasures {
    const char* name;
    std::vector<TaskMeasure> measures;
  };
  MethodMeasures methods[2] = {
      {"scorer", measure_policy(c, tasks, make_scorer_policy(params, c.scorer_options),
                                keep_ratio)},
      {"heuristic", measure_policy(c, tasks, make_heuristic_policy(), keep_ratio)}};

  CsvDoc csv({"method", "level", "count", "mean_max_component_ratio",
              "mean_spatial_entropy"});
  JsonlDoc jsonl("granularity");
  std::vector<std::vector<std::string>> table;
  for (const MethodMeasures& m : methods) {
    std::array<EvalBucket, 4> buckets = bucket_measures(m.measures);
    for (int slot : {3, 0, 1, 2}) {
      const EvalBucket& b = buckets[static_cast<size_t>(slot)];
      std::string level = slot == 3 ? "all" : kLevelNames[slot];
      csv.add({m.name, level, std::to_string(b.count),
               bucket_stat(b, &EvalBucket::mcr, 6), bucket_stat(b, &EvalBucket::entropy, 6)});
      json rec{{"method", m.name},
               {"level", level},
               {"count", b.count},
               {"keep_ratio", keep_ratio},
               {"partition_m", c.eval_partition_m}};
      if (b.count > 0) {
        rec["mean_max_component_ratio"] = b.mcr / b.count;
        rec["mean_spatial_entropy"] = b.entropy / b.count;
      } else {
        rec["mean_max_component_ratio"] = nullptr;
        rec["mean_spatial_entropy"] = nullptr;
      }
      jsonl.add(rec);
    }
    const EvalBucket& all = buckets[3];
    table.push_back({m.name, std::to_string(all.count), bucket_stat(all, &EvalBucket::mcr, 4),
                     bucket_stat(all, &EvalBucket::entropy, 4)});
  }

  ensure_dir(results_dir(c));
  std::string csv_path = (fs::path(results_dir(c)) / "granularity.csv").string();
  std::string jsonl_path = (fs::path(results_dir(c)) / "granularity.jsonl").string();
  csv.save(csv_path);
  jsonl.save(jsonl_path);
  write_manifest(c.out_dir, "granularity", config_to_json(c),
                 {"results/granularity.csv", "results/granularity.jsonl"});
  write_timings(c.out_dir, "granularity", {{"granularity", now_seconds() - t0}});

  std::cout << render_table({"method", "tasks", "mcr", "entropy"}, table);
  std::cout << "keep ratio " << fmt_double(keep_ratio, 2) << ", partition "
            << c.eval_partition_m << "x" << c.eval_partition_m << "\n";
  return 0;
}

int cmd_credit_demo(const ExperimentConfig& c, int rollouts, uint64_t seed) {
  double t0 = now_seconds();
  CreditDemoReport report = run_credit_demo(rollouts, seed);

  const char* names[4] = {"A", "B", "C", "D"};
  JsonlDoc jsonl("credit_demo");
  std::vector<std::vector<std::string>> table;
  for (int t = 0; t < 4; ++t) {
    double se = report.mc_standard_error[static_cast<size_t>(t)];
    double est = report.mc_estimate[static_cast<size_t>(t)];
    double z = se > 0.0 ? est / se : 0.0;
    jsonl.add({{"token", names[t]},
               {"keep_prob", report.probs[static_cast<size_t>(t)]},
               {"set_level_gradient", report.set_level_gradient[static_cast<size_t>(t)]},
               {"mc_estimate", est},
               {"mc_standard_error", se},
               {"z_score", z}});
    table.push_back({names[t], fmt_double(report.probs[static_cast<size_t>(t)], 6),
                     fmt_double(report.set_level_gradient[static_cast<size_t>(t)], 6),
                     fmt_double(est, 6), fmt_double(se, 6), fmt_double(z, 2)});
  }
  jsonl.add({{"rollouts", report.rollouts},
             {"seed", report.seed},
             {"full_retention_reward", report.set_level_reward}});

  ensure_dir(results_dir(c));
  std::string jsonl_path = (fs::path(results_dir(c)) / "credit_demo.jsonl").string();
  jsonl.save(jsonl_path);
  write_manifest(c.out_dir, "credit-demo", config_to_json(c),
                 {"results/credit_demo.jsonl"});
  write_timings(c.out_dir, "credit-demo", {{"credit-demo", now_seconds() - t0}});

  std::cout << render_table({"token", "keep_prob", "set_grad", "mc_estimate", "mc_se", "z"},
                            table);
  std::cout << "full-retention reward " << report.set_level_reward << " over "
            << report.rollouts
            << " rollouts; the set-level gradient treats every kept token alike, the"
               " sampled estimate isolates the culprit C\n";
  return 0;
}

int cmd_sweep_budget(const ExperimentConfig& c, const std::string& checkpoint,
                     const std::vector<double>& keep_ratios) {
  require(!keep_ratios.empty(), "sweep-budget needs at least one keep ratio");
  for (double r : keep_ratios)
    require(r > 0.0 && r <= 1.0, "sweep keep ratios must lie in (0, 1]");
  double t0 = now_seconds();
  std::vector<SyntheticTask> tasks = load_suite(c);
  require(!tasks.empty(), "task suite in " + tasks_dir(c) + " is empty");
  ScorerParams params = load_scorer(c, checkpoint);

  SelectionPolicy scorer_policy = make_scorer_policy(params, c.scorer_options);
  SelectionPolicy heuristic_policy = make_heuristic_policy();
  int n0 = c.suite.height * c.suite.width;

  CsvDoc csv({"keep_ratio", "kept", "t_eq_nominal", "mean_t_eq_realized",
              "mean_flop_proxy", "scorer_accuracy", "heuristic_accuracy", "scorer_LV1",
              "scorer_LV2", "scorer_LV3"});
  JsonlDoc jsonl("sweep_budget");
  std::vector<std::vector<std::string>> table;

  for (double ratio : keep_ratios) {
    BudgetSpec budget = BudgetSpec::single_stage(n0, ratio, c.budget_layers);
    std::vector<TaskMeasure> scorer_m = measure_policy(c, tasks, scorer_policy, ratio);
    std::vector<TaskMeasure> heuristic_m = measure_policy(c, tasks, heuristic_policy, ratio);
    std::array<EvalBucket, 4> sb = bucket_measures(scorer_m);
    std::array<EvalBucket, 4> hb = bucket_measures(heuristic_m);
    int k = topk_count(ratio, n0);

    csv.add({fmt_double(ratio, 4), std::to_string(k),
             fmt_double(equivalent_tokens(budget), 2),
             bucket_stat(sb[3], &EvalBucket::t_eq, 2),
             bucket_stat(sb[3], &EvalBucket::flop, 1), bucket_accuracy(sb[3]),
             bucket_accuracy(hb[3]), bucket_accuracy(sb[0]), bucket_accuracy(sb[1]),
             bucket_accuracy(sb[2])});
    json rec{{"keep_ratio", ratio},
             {"kept", k},
             {"t_eq_nominal", equivalent_tokens(budget)},
             {"mean_t_eq_realized", sb[3].count ? sb[3].t_eq / sb[3].count : 0.0},
             {"mean_flop_proxy", sb[3].count ? sb[3].flop / sb[3].count : 0.0},
             {"scorer_accuracy",
              static_cast<double>(sb[3].correct) / std::max(sb[3].count, 1)},
             {"heuristic_accuracy",
              static_cast<double>(hb[3].correct) / std::max(hb[3].count, 1)}};
    for (int lvl = 0; lvl < 3; ++lvl) {
      const EvalBucket& b = sb[static_cast<size_t>(lvl)];
      if (b.count > 0)
        rec[std::string("scorer_") + kLevelNames[lvl]] =
            static_cast<double>(b.correct) / b.count;
      else
        rec[std::string("scorer_") + kLevelNames[lvl]] = nullptr;
    }
    jsonl.add(rec);
    table.push_back({fmt_double(ratio, 2), std::to_string(k),
                     fmt_double(equivalent_tokens(budget), 1),
                     bucket_stat(sb[3], &EvalBucket::flop, 0), bucket_accuracy(sb[3], 3),
                     bucket_accuracy(hb[3], 3)});
  }

  ensure_dir(results_dir(c));
  std::string csv_path = (fs::path(results_dir(c)) / "sweep.csv").string();
  std::string jsonl_path = (fs::path(results_dir(c)) / "sweep.jsonl").string();
  csv.save(csv_path);
  jsonl.save(jsonl_path);
  write_manifest(c.out_dir, "sweep-budget", config_to_json(c),
                 {"results/sweep.csv", "results/sweep.jsonl"});
  write_timings(c.out_dir, "sweep-budget", {{"sweep", now_seconds() - t0}});

  std::cout << render_table(
      {"ratio", "kept", "t_eq", "flop", "scorer_acc", "heuristic_acc"}, table);
  std::cout << "results in " << csv_path << "\n";
  return 0;
}

}  // namespace grip::cli
