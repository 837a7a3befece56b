#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "tgvcrn/cli/experiment.hpp"

namespace tgvcrn::cli {

struct CommandArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> grid;     // sweep
  std::optional<std::string> corrupt;            // gradcheck
};

// Each command throws ContractError / NumericError on failure; run_command
// maps those to exit codes 1 / 2.
void cmd_gen(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log);
void cmd_train(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log);
void cmd_eval(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log);
void cmd_cf_rollout(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log);
// Returns false when any row fails.
bool cmd_gradcheck(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log);
void cmd_sweep(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log);

int run_command(const std::string& name, const CommandArgs& args, std::ostream& log,
                std::ostream& err);

}  // namespace tgvcrn::cli
