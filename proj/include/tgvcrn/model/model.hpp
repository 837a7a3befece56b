#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "tgvcrn/ad/params.hpp"
#include "tgvcrn/ad/tape.hpp"
#include "tgvcrn/boid/episode.hpp"
#include "tgvcrn/model/config.hpp"
#include "tgvcrn/nn/layers.hpp"

namespace tgvcrn::model {

using ad::Tape;
using ad::Tensor;
using ad::Var;

// Episodes stacked for one rollout: B episodes of K agents, agents of an
// episode on consecutive rows.
struct Batch {
  int B = 0;
  int K = 0;
  int T = 0;
  std::vector<Tensor> x;   // T entries, (B*K) x 5, raw units
  std::vector<Tensor> xg;  // T entries, B x 1
  std::vector<Tensor> a;   // T entries, B x 1, treatment applied on t -> t+1
  std::vector<Tensor> y;   // T entries, B x 1, outcome at t+1
  std::vector<int> intervention;

  static Batch from_episodes(std::span<const boid::TrajectorySample* const> eps);
  static Batch from_episodes(const std::vector<boid::TrajectorySample>& eps);
};

enum class Mode { Train, Infer };

struct RolloutOptions {
  Mode mode = Mode::Train;
  // Infer mode only: draw latents from the prior instead of using its mean.
  bool sample_latents = false;
};

struct RolloutResult {
  std::vector<Var> y_hat;     // T entries, B x 1: y_{t+1}
  std::vector<Var> a_logit;   // T entries, B x 1
  std::vector<Var> x_hat;     // T - 1 entries, (B*K) x 5 raw: x_{t+1}
  std::vector<Var> xg_hat;    // T - 1 entries, B x 1: x^g_{t+1}
  std::vector<Var> x_hat_norm;  // x_hat divided by the feature scales

  // Sums over the batch. Missing terms are constant zeros.
  Var kl;            // per-agent latents, posterior steps
  Var recon;         // per-agent reconstruction NLL, steps 0..T-2
  Var recon_burnin;  // the part of recon on steps 0..T_b-1
  Var kl_global;     // global branch (GV_CRN)
  Var recon_global;

  // Decoder Gaussian per step (T - 1 entries), for dumps.
  std::vector<Tensor> dec_mu;
  std::vector<Tensor> dec_sigma;
  std::vector<Tensor> recon_target;
};

class Model {
 public:
  Model(const ModelConfig& cfg, const boid::SimConfig& sim, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const boid::SimConfig& sim() const { return sim_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  // Feature scales for network inputs and the covariate loss:
  // (box, box, speed, speed, beta).
  const Tensor& feature_scale() const { return scale_; }

  RolloutResult rollout(Tape& tape, const Batch& batch, const RolloutOptions& opt,
                        Rng& rng) const;

  // Treatment classifier in isolation: logits for a (B*K) x Z latent batch.
  Var treatment_logits(Tape& tape, Var z_agents, int K) const;
  nn::TreatmentHead& treatment_head() { return treat_; }

  void save(const std::filesystem::path& manifest, const std::filesystem::path& blob) const;
  void load(const std::filesystem::path& manifest, const std::filesystem::path& blob);

 private:
  RolloutResult rollout_agents(Tape& tape, const Batch& batch, const RolloutOptions& opt,
                               Rng& rng) const;
  RolloutResult rollout_rnn(Tape& tape, const Batch& batch, const RolloutOptions& opt) const;
  Var normalize(Tape& tape, Var x_raw, int rows) const;

  ModelConfig cfg_;
  boid::SimConfig sim_;
  ad::ParamStore params_;
  Tensor scale_;

  // per-agent variants
  std::unique_ptr<nn::InteractionBlock> prior_block_, enc_block_, dec_block_;
  nn::GaussianHead prior_head_, enc_head_, dec_head_;
  nn::GruCell gru_;
  nn::Mlp outcome_;
  nn::TreatmentHead treat_;
  // global branch (GV_CRN)
  nn::Mlp g_prior_, g_enc_, g_dec_;
  nn::GaussianHead g_prior_head_, g_enc_head_, g_dec_head_;
  nn::GruCell g_gru_;
  // RNN baseline
  nn::GruCell rnn_;
  nn::Linear rnn_x_, rnn_xg_;
  nn::Mlp rnn_treat_;
};

}  // namespace tgvcrn::model
