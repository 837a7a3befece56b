#pragma once

#include "tgvcrn/common/kvconfig.hpp"
#include "tgvcrn/model/model.hpp"

namespace tgvcrn::train {

using model::Var;

struct LossWeights {
  double alpha = 0.1;   // sequential ELBO
  double gamma = 0.1;   // covariate prediction
  double lambda = 0.1;  // treatment classifier
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

// Per-episode loss terms, averaged over the batch.
struct LossComponents {
  double total = 0.0;
  double y = 0.0;
  double x = 0.0;
  double a = 0.0;
  double gvrnn = 0.0;
};

double combine(double y, double gvrnn, double x, double a, const LossWeights& w);

struct LossTerms {
  Var total, y, x, a, gvrnn;
  LossComponents values() const;
};

// L = L_y + alpha L_gvrnn + gamma L_x + lambda L_a for a factual rollout.
//   L_y: squared outcome error, mean over steps;
//   L_x: squared error of the scaled local covariates (mean over agents and
//        features) plus that of x^g, mean over the T-1 predicted steps;
//   L_a: binary cross-entropy of the treatment classifier, mean over steps;
//   L_gvrnn: reconstruction NLL per agent-step plus KL per agent-burn-in-step,
//            and for the global branch the same per episode.
LossTerms loss_total(model::Tape& tape, const model::Model& m, const model::RolloutResult& r,
                     const model::Batch& batch, const LossWeights& w);

}  // namespace tgvcrn::train
