#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tgvcrn/boid/sim.hpp"
#include "tgvcrn/common/kvconfig.hpp"
#include "tgvcrn/model/config.hpp"
#include "tgvcrn/train/evaluate.hpp"
#include "tgvcrn/train/trainer.hpp"

namespace tgvcrn::cli {

inline constexpr const char* kVersion = "0.1.0";

// Sections: [experiment] seed; [data] n_train n_val n_test; [paths] dataset out;
// [eval] chunk; [sim] ...; [model] ...; [train] ...
// Unknown keys are rejected. Relative paths are taken from the working
// directory.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  int n_train = 2000;
  int n_val = 200;
  int n_test = 200;
  std::filesystem::path dataset_dir = "data";
  std::filesystem::path out_dir = "runs";
  boid::SimConfig sim;
  model::ModelConfig model;
  train::TrainConfig train;
  train::EvalOptions eval;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_text() const;

  // Sub-seeds, each a stable hash of the root seed and a purpose.
  std::uint64_t data_seed() const;
  std::uint64_t init_seed() const;
};

// Written by every command next to its outputs (<dir>/run_manifest_<command>.json):
// config echo, version, seed, wall clock and SHA-256 of every produced file.
void write_run_manifest(const std::filesystem::path& dir, const std::string& command,
                        const ExperimentConfig& cfg, double wall_seconds,
                        const std::map<std::string, std::filesystem::path>& files);

// All regular files below dir, keyed by their relative path, excluding run
// manifests.
std::map<std::string, std::filesystem::path> files_below(const std::filesystem::path& dir);

}  // namespace tgvcrn::cli
