#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"

namespace grip::cli {

int cmd_generate_suite(const ExperimentConfig& config);
int cmd_train(const ExperimentConfig& config);
int cmd_evaluate(const ExperimentConfig& config, const std::string& checkpoint);
int cmd_classify_difficulty(const ExperimentConfig& config);
int cmd_granularity(const ExperimentConfig& config, const std::string& checkpoint,
                    double keep_ratio);
int cmd_credit_demo(const ExperimentConfig& config, int rollouts, uint64_t seed);
int cmd_sweep_budget(const ExperimentConfig& config, const std::string& checkpoint,
                     const std::vector<double>& keep_ratios);

// Default checkpoint a command reads when --checkpoint is not given.
std::string default_checkpoint(const ExperimentConfig& config);

}  // namespace grip::cli
