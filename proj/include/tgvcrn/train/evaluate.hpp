#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tgvcrn/boid/dataset.hpp"
#include "tgvcrn/model/model.hpp"
#include "tgvcrn/train/metrics.hpp"
#include "tgvcrn/train/trainer.hpp"

namespace tgvcrn::train {

struct EvalOptions {
  int chunk = 32;
  std::uint64_t seed = 1;  // latent draws when the model averages samples
};

// Free-run rollouts of every arm of every test episode: the burn-in is
// observed, afterwards the model feeds on its own covariate predictions.
// Models with stochastic latents and ite_samples > 0 average that many
// sampled rollouts; otherwise prior means are used.
CfPredictions predict_counterfactuals(const model::Model& m, const boid::CounterfactualSet& cf,
                                      const EvalOptions& opt);

MetricsReport evaluate(const model::Model& m, const boid::CounterfactualSet& cf,
                       const EvalOptions& opt);

// Predicted trajectories as episodes (burn-in rows observed, later rows
// predicted), for dumping.
std::vector<boid::TrajectorySample> predictions_as_episodes(const boid::CounterfactualSet& cf,
                                                            const CfPredictions& p, int T_b);

struct SweepPoint {
  LossWeights weights;
  std::string label;
};

// The default weights plus each of alpha, gamma, lambda moved to 0.01 and 1.0
// one at a time.
std::vector<SweepPoint> default_grid(const LossWeights& base = {});
// One point per non-comment line: "alpha gamma lambda" (commas allowed).
std::vector<SweepPoint> parse_grid(const std::string& text);

struct SweepRow {
  SweepPoint point;
  TrainResult train;
  MetricsReport report;
};

// Each point trains a freshly initialized model with identical seeds, so a
// row does not depend on which other points are run or in what order.
std::vector<SweepRow> sweep(const model::ModelConfig& mc, const boid::Dataset& ds,
                            std::uint64_t init_seed, const TrainConfig& tc,
                            const std::vector<SweepPoint>& grid, const EvalOptions& eo,
                            std::ostream* progress = nullptr);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace tgvcrn::train
