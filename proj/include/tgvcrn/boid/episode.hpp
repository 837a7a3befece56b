#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tgvcrn/boid/sim.hpp"

namespace tgvcrn::boid {

inline constexpr int kLocalFeatures = 5;  // px, py, vx, vy, directional change

// One episode of T steps. Row t holds the observation at step t, the
// treatment applied on the transition t -> t+1, and the outcome at t+1.
struct TrajectorySample {
  int T = 0;
  int K = 0;
  std::vector<double> x_local;   // T*K*5, index (t*K + k)*5 + f
  std::vector<double> x_global;  // T
  std::vector<std::uint8_t> treatment;  // T
  std::vector<double> outcome;   // T
  int intervention = -1;         // t', or -1 when never treated

  double local(int t, int k, int f) const { return x_local[(t * K + k) * kLocalFeatures + f]; }
  bool operator==(const TrajectorySample&) const = default;
};

BoidState initial_state(const SimConfig& cfg, std::uint64_t seed);

// Rolls the simulator forward from the seeded initial state. intervention is a
// step index in the window, or nullopt for the never-treated arm.
TrajectorySample simulate(const SimConfig& cfg, std::uint64_t seed,
                          std::optional<int> intervention);

// Same, also returning the T+1 visited states.
TrajectorySample simulate_states(const SimConfig& cfg, std::uint64_t seed,
                                 std::optional<int> intervention,
                                 std::vector<BoidState>* states);

// Rebuilds a state from the position/velocity columns of row t.
BoidState state_at(const TrajectorySample& s, int t, double speed);

}  // namespace tgvcrn::boid
