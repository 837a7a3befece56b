#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tgvcrn/boid/episode.hpp"
#include "tgvcrn/common/kvconfig.hpp"

namespace tgvcrn::boid {

// For each test episode, one rollout per intervention step in the window
// (ascending) followed by the never-treated rollout, all from the same seed.
struct CounterfactualSet {
  int n_episodes = 0;
  std::vector<int> timings;  // intervention steps, ascending
  std::vector<TrajectorySample> rollouts;  // episode-major, timings.size() + 1 per episode

  int arms() const { return static_cast<int>(timings.size()) + 1; }
  const TrajectorySample& arm(int episode, int j) const { return rollouts[episode * arms() + j]; }
  const TrajectorySample& never(int episode) const { return arm(episode, arms() - 1); }
  // Throws ContractError when rollouts are missing or mislabelled.
  void validate() const;
};

struct Dataset {
  SimConfig sim;
  std::uint64_t seed = 0;
  std::vector<TrajectorySample> train, val, test;
  CounterfactualSet test_cf;
};

// Per-episode factual sample for a split ("train", "val", "test").
TrajectorySample factual_episode(const SimConfig& cfg, std::uint64_t root, const std::string& split,
                                 int index);
// Intervention drawn for that episode: -1 (never treated) or a window step.
int assigned_intervention(const SimConfig& cfg, std::uint64_t root, const std::string& split,
                          int index);

CounterfactualSet counterfactual_set(const SimConfig& cfg, std::uint64_t root, int n_episodes);

Dataset generate_dataset(const SimConfig& cfg, int n_train, int n_val, int n_test,
                         std::uint64_t seed);

// Ground-truth effects tau[i * timings + j] = y^(t'_j)_{T+1} - y^(none)_{T+1}.
struct IteTable {
  int n_episodes = 0;
  int n_timings = 0;
  std::vector<double> tau;
  double at(int i, int j) const { return tau[i * n_timings + j]; }
  double mean() const;
};
IteTable ground_truth_ite(const CounterfactualSet& cf);

// Sim section of a sectioned config ("sim.K", "sim.dt", ...).
SimConfig sim_from_config(const KeyValueConfig& cfg);
void sim_to_config(const SimConfig& sim, KeyValueConfig& cfg);

// On-disk layout: <dir>/{train,val,test,test_cf}/manifest.txt plus one
// little-endian blob per field (f32 reals, u8 treatment, i32 intervention).
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// Writes episodes under the same manifest schema; real fields use f64 when
// `f64` is set (rollout dumps) and f32 otherwise.
void write_episodes(const std::filesystem::path& dir, const std::string& split,
                    const std::vector<TrajectorySample>& eps, const SimConfig& sim,
                    std::uint64_t seed, bool f64, const std::string& extra_header = "");
std::vector<TrajectorySample> read_episodes(const std::filesystem::path& dir, SimConfig* sim,
                                            std::uint64_t* seed);

}  // namespace tgvcrn::boid
