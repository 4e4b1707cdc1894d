#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "grip/analysis.hpp"
#include "grip/common.hpp"

#include "commands.hpp"
#include "config.hpp"

namespace {

using grip::cli::ExperimentConfig;

// Precedence: command-line flag, then environment variable, then the config
// file, then the built-in default. GRIP_OUT_DIR and GRIP_THREADS are the only
// environment knobs; everything else lives in the config file.
void apply_overrides(ExperimentConfig& config, const std::string& out_flag,
                     int threads_flag) {
  if (const char* env = std::getenv("GRIP_OUT_DIR"); env && *env) config.out_dir = env;
  if (const char* env = std::getenv("GRIP_THREADS"); env && *env) {
    char* end = nullptr;
    long value = std::strtol(env, &end, 10);
    grip::require(end && *end == '\0' && value >= 1,
                  "GRIP_THREADS must be a positive integer, got \"" + std::string(env) +
                      "\"");
    config.threads = static_cast<int>(value);
  }
  if (!out_flag.empty()) config.out_dir = out_flag;
  if (threads_flag > 0) config.threads = threads_flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"budget-aware token pruning workbench: synthetic suites, two-stage "
               "scorer training, and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::string checkpoint_flag;
  int threads_flag = 0;
  double ratio_flag = -1.0;
  std::vector<double> ratios_flag;
  int rollouts_flag = 100000;
  uint64_t seed_flag = 20260816;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    CLI::Option* opt = sub->add_option("--config", config_path,
                                       "experiment config file (JSON)");
    opt->check(CLI::ExistingFile);
    if (config_required) opt->required();
    sub->add_option("--out", out_flag,
                    "output directory (overrides config and GRIP_OUT_DIR)");
    sub->add_option("--threads", threads_flag,
                    "worker threads for evaluation loops; 1 is the bit-reproducible "
                    "mode (overrides config and GRIP_THREADS)")
        ->check(CLI::PositiveNumber);
  };

  auto load = [&]() {
    ExperimentConfig config = config_path.empty() ? grip::cli::default_config()
                                                  : grip::cli::load_config(config_path);
    apply_overrides(config, out_flag, threads_flag);
    return config;
  };

  auto resolve_checkpoint = [&](const ExperimentConfig& config) {
    return checkpoint_flag.empty() ? grip::cli::default_checkpoint(config)
                                   : checkpoint_flag;
  };

  int rc = 0;

  CLI::App* generate = app.add_subcommand("generate-suite",
                                          "generate the task suite and its index");
  add_common(generate, true);
  generate->callback([&]() { rc = grip::cli::cmd_generate_suite(load()); });

  CLI::App* train = app.add_subcommand(
      "train", "distill the scorer, then run policy optimization on top of it");
  add_common(train, true);
  train->callback([&]() { rc = grip::cli::cmd_train(load()); });

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score a checkpoint across the configured budgets");
  add_common(evaluate, true);
  evaluate->add_option("--checkpoint", checkpoint_flag,
                       "scorer checkpoint (default <out>/checkpoints/rl.ckpt)");
  evaluate->callback([&]() {
    ExperimentConfig config = load();
    rc = grip::cli::cmd_evaluate(config, resolve_checkpoint(config));
  });

  CLI::App* classify = app.add_subcommand(
      "classify-difficulty", "sweep heuristic correctness curves and bin each task");
  add_common(classify, true);
  classify->callback([&]() { rc = grip::cli::cmd_classify_difficulty(load()); });

  CLI::App* granularity = app.add_subcommand(
      "granularity", "spatial structure of kept sets: largest component and entropy");
  add_common(granularity, true);
  granularity->add_option("--checkpoint", checkpoint_flag,
                          "scorer checkpoint (default <out>/checkpoints/rl.ckpt)");
  granularity->add_option("--ratio", ratio_flag,
                          "keep ratio for the masks (default: the training budget)");
  granularity->callback([&]() {
    ExperimentConfig config = load();
    double ratio = ratio_flag > 0.0 ? ratio_flag : config.budget_keep_ratio;
    rc = grip::cli::cmd_granularity(config, resolve_checkpoint(config), ratio);
  });

  CLI::App* credit = app.add_subcommand(
      "credit-demo",
      "credit assignment on the phantom-pair task: set-level gradient vs sampled "
      "estimate");
  add_common(credit, false);
  credit->add_option("--rollouts", rollouts_flag, "Monte Carlo sample count")
      ->check(CLI::Range(2, 100000000));
  credit->add_option("--seed", seed_flag, "rollout seed");
  credit->callback(
      [&]() { rc = grip::cli::cmd_credit_demo(load(), rollouts_flag, seed_flag); });

  CLI::App* sweep = app.add_subcommand(
      "sweep-budget", "accuracy and cost of one checkpoint across keep ratios");
  add_common(sweep, true);
  sweep->add_option("--checkpoint", checkpoint_flag,
                    "scorer checkpoint (default <out>/checkpoints/rl.ckpt)");
  sweep->add_option("--ratios", ratios_flag, "keep ratios (default: 0.1 .. 1.0)");
  sweep->callback([&]() {
    ExperimentConfig config = load();
    std::vector<double> ratios =
        ratios_flag.empty() ? grip::default_curve_ratios() : ratios_flag;
    rc = grip::cli::cmd_sweep_budget(config, resolve_checkpoint(config), ratios);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
