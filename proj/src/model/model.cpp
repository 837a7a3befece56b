#include "tgvcrn/model/model.hpp"

#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::model {

Batch Batch::from_episodes(std::span<const boid::TrajectorySample* const> eps) {
  if (eps.empty()) throw ContractError("batch needs at least one episode");
  Batch b;
  b.B = static_cast<int>(eps.size());
  b.K = eps[0]->K;
  b.T = eps[0]->T;
  for (const auto* e : eps) {
    if (e->K != b.K || e->T != b.T) {
      throw DimensionError("episodes in a batch must share K and T");
    }
  }
  const int F = boid::kLocalFeatures;
  const int N = b.B * b.K;
  for (int t = 0; t < b.T; ++t) {
    Tensor x(N, F), xg(b.B, 1), a(b.B, 1), y(b.B, 1);
    for (int i = 0; i < b.B; ++i) {
      const auto& e = *eps[i];
      std::copy_n(e.x_local.begin() + static_cast<std::ptrdiff_t>(t) * b.K * F, b.K * F,
                  x.data() + static_cast<std::ptrdiff_t>(i) * b.K * F);
      xg(i, 0) = e.x_global[t];
      a(i, 0) = e.treatment[t];
      y(i, 0) = e.outcome[t];
    }
    b.x.push_back(std::move(x));
    b.xg.push_back(std::move(xg));
    b.a.push_back(std::move(a));
    b.y.push_back(std::move(y));
  }
  for (const auto* e : eps) b.intervention.push_back(e->intervention);
  return b;
}

Batch Batch::from_episodes(const std::vector<boid::TrajectorySample>& eps) {
  std::vector<const boid::TrajectorySample*> ptrs;
  for (const auto& e : eps) ptrs.push_back(&e);
  return from_episodes(std::span<const boid::TrajectorySample* const>(ptrs));
}

Model::Model(const ModelConfig& cfg, const boid::SimConfig& sim, std::uint64_t seed)
    : cfg_(cfg), sim_(sim), scale_(1, boid::kLocalFeatures) {
  sim_.validate();
  scale_(0, 0) = sim.box;
  scale_(0, 1) = sim.box;
  scale_(0, 2) = sim.speed;
  scale_(0, 3) = sim.speed;
  scale_(0, 4) = sim.beta_rad();

  Rng rng(seed);
  const int F = boid::kLocalFeatures;
  const int H = cfg.hidden, Z = cfg.latent, M = cfg.mlp_hidden;
  if (cfg.variant == Variant::RNN_BASELINE) {
    const int R = cfg.rnn_hidden;
    const int flat = sim.K * F;
    rnn_ = nn::GruCell(params_, "rnn.gru", flat + 2, R, rng);
    rnn_x_ = nn::Linear(params_, "rnn.x", R, flat, rng);
    rnn_xg_ = nn::Linear(params_, "rnn.xg", R, 1, rng);
    rnn_treat_ = nn::Mlp(params_, "rnn.treat", {R + flat + 1, M, 1}, nn::Activation::Identity, rng);
    outcome_ = nn::Mlp(params_, "outcome", {R + 2, M, 1}, nn::Activation::Sigmoid, rng);
    return;
  }

  auto block = [&](const std::string& name, int in) -> std::unique_ptr<nn::InteractionBlock> {
    if (cfg.graph()) {
      return std::make_unique<nn::GnnBlock>(params_, name, in, cfg.edge_hidden, cfg.message,
                                            std::vector<int>{M}, rng);
    }
    return std::make_unique<nn::FlatBlock>(params_, name, sim.K, in, M, M, rng);
  };
  const int dec_out = cfg.theory() ? 1 : F;
  prior_block_ = block("prior", H);
  prior_head_ = nn::GaussianHead(params_, "prior.head", M, Z, rng);
  if (cfg.variant != Variant::TG_CRN) {
    enc_block_ = block("enc", F + H);
    enc_head_ = nn::GaussianHead(params_, "enc.head", M, Z, rng);
  }
  dec_block_ = block("dec", Z + H);
  dec_head_ = nn::GaussianHead(params_, "dec.head", M, dec_out, rng);
  gru_ = nn::GruCell(params_, "gru", F + Z, H, rng);

  const bool global = cfg.variant == Variant::GV_CRN;
  const int zbar = global ? 2 * Z : Z;
  outcome_ = nn::Mlp(params_, "outcome", {zbar + 2, M, 1}, nn::Activation::Sigmoid, rng);
  treat_ = nn::TreatmentHead(params_, "treat", zbar, M, rng);
  treat_.use_grl = cfg.use_grl;
  treat_.grl_scale = cfg.grl_scale;

  if (global) {
    g_prior_ = nn::Mlp(params_, "g.prior", {H, M}, nn::Activation::Tanh, rng);
    g_prior_head_ = nn::GaussianHead(params_, "g.prior.head", M, Z, rng);
    g_enc_ = nn::Mlp(params_, "g.enc", {1 + H, M}, nn::Activation::Tanh, rng);
    g_enc_head_ = nn::GaussianHead(params_, "g.enc.head", M, Z, rng);
    g_dec_ = nn::Mlp(params_, "g.dec", {Z + H, M}, nn::Activation::Tanh, rng);
    g_dec_head_ = nn::GaussianHead(params_, "g.dec.head", M, 1, rng);
    g_gru_ = nn::GruCell(params_, "g.gru", 1 + Z, H, rng);
  }
}

Var Model::normalize(Tape& tape, Var x_raw, int rows) const {
  Tensor inv(rows, boid::kLocalFeatures);
  for (int r = 0; r < rows; ++r) {
    for (int f = 0; f < boid::kLocalFeatures; ++f) inv(r, f) = 1.0 / scale_(0, f);
  }
  return x_raw * tape.constant(std::move(inv));
}

Var Model::treatment_logits(Tape& tape, Var z_agents, int K) const {
  return treat_.logits(tape, ad::segment_mean(z_agents, K));
}

RolloutResult Model::rollout(Tape& tape, const Batch& batch, const RolloutOptions& opt,
                             Rng& rng) const {
  if (batch.K != sim_.K || batch.T != sim_.T) {
    throw DimensionError("batch shape (K=" + std::to_string(batch.K) + ", T=" +
                         std::to_string(batch.T) + ") does not match the model");
  }
  if (cfg_.variant == Variant::RNN_BASELINE) return rollout_rnn(tape, batch, opt);
  return rollout_agents(tape, batch, opt, rng);
}

void Model::save(const std::filesystem::path& manifest, const std::filesystem::path& blob) const {
  params_.save(manifest, blob, variant_name(cfg_.variant));
}

void Model::load(const std::filesystem::path& manifest, const std::filesystem::path& blob) {
  ad::ParamStore copy = params_;
  const std::string tag = copy.load(manifest, blob);
  if (tag != variant_name(cfg_.variant)) {
    throw ContractError("checkpoint holds a " + tag + " model, expected " +
                        variant_name(cfg_.variant));
  }
  params_ = std::move(copy);
}

}  // namespace tgvcrn::model
