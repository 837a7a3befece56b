#pragma once

#include "tgvcrn/ad/tape.hpp"
#include "tgvcrn/boid/sim.hpp"

namespace tgvcrn::model {

using ad::Tensor;
using ad::Var;

struct TheoryStep {
  Var x_local;  // (B*K) x 5: position, velocity, realized turn
  Var x_global; // B x 1: mean angular momentum of the predicted state
  Var turn;     // (B*K) x 1
};

// Next covariates from the current ones and a proposed per-agent turn
// (radians). The proposal is limited to +-beta; agents farther than r_a/2 from
// their group's centroid steer toward it instead; otherwise agents with
// orientation-zone neighbors and no repulsion-zone neighbors average the
// proposed heading with the neighbors' mean heading. The orientation radius
// follows each episode's treatment flag. The realized turn is limited to
// +-beta and positions advance by speed*dt along the new heading.
TheoryStep theory_x(const boid::SimConfig& sim, Var x_cur, Var proposed_turn,
                    const Tensor& treated, int K);

// Mean angular momentum of each group, from positions and unit headings
// given as (B*K) x 1 columns.
Var angular_momentum(Var px, Var py, Var hx, Var hy, int K);

}  // namespace tgvcrn::model
