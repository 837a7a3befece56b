#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include "tgvcrn/boid/episode.hpp"
#include "tgvcrn/common/kvconfig.hpp"
#include "tgvcrn/model/model.hpp"
#include "tgvcrn/train/loss.hpp"

namespace tgvcrn::train {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 256;
  // Episodes per forward/backward pass; gradients of a batch are summed over
  // its chunks, so this changes memory use and not results.
  int chunk = 32;
  double lr = 1e-4;
  double clip_norm = 10.0;
  LossWeights weights;
  std::uint64_t seed = 1;
  void validate() const;
};

TrainConfig train_from_config(const KeyValueConfig& cfg);
void train_to_config(const TrainConfig& t, KeyValueConfig& cfg);

struct EpochLog {
  int epoch = 0;
  LossComponents train;  // mean over the epoch's batches
  LossComponents val;
  int clipped = 0;       // batches whose gradient norm was clipped
  double max_grad_norm = 0.0;
};

struct TrainResult {
  LossComponents initial_val;
  std::vector<EpochLog> log;
  int best_epoch = 0;  // 0 = the initialization
  double best_val = 0.0;
};

// Loss of the model on a set of episodes, in train mode with a fixed stream of
// latent noise; no parameter is touched.
LossComponents dataset_loss(const model::Model& m, const std::vector<boid::TrajectorySample>& eps,
                            const LossWeights& w, int chunk, std::uint64_t seed);

// Minibatch Adam on `train`; after every epoch the validation loss is
// measured and the parameters with the lowest validation loss (the
// initialization included) are left in the model.
TrainResult fit(model::Model& m, const std::vector<boid::TrajectorySample>& train,
                const std::vector<boid::TrajectorySample>& val, const TrainConfig& cfg,
                std::ostream* progress = nullptr);

void write_loss_csv(const std::filesystem::path& path, const TrainResult& r);

}  // namespace tgvcrn::train
