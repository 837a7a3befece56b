#include <numbers>

#include "tgvcrn/model/model.hpp"
#include "tgvcrn/model/theory.hpp"

namespace tgvcrn::model {
namespace {

Var zero(Tape& tape) { return tape.constant(Tensor::scalar(0.0)); }

Tensor column(const Tensor& x, int c) {
  Tensor out(x.rows(), 1);
  for (int r = 0; r < x.rows(); ++r) out(r, 0) = x(r, c);
  return out;
}

Tensor scaled_residual(const Tensor& next, const Tensor& cur, const Tensor& scale) {
  Tensor out(next.rows(), next.cols());
  for (int r = 0; r < next.rows(); ++r) {
    for (int c = 0; c < next.cols(); ++c) out(r, c) = (next(r, c) - cur(r, c)) / scale(0, c);
  }
  return out;
}

Tensor tile_rows(const Tensor& row, int rows) {
  Tensor out(rows, row.cols());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < row.cols(); ++c) out(r, c) = row(0, c);
  }
  return out;
}

Var draw(const nn::Gaussian& g, bool sample, Rng& rng) {
  return sample ? ad::gaussian_sample(g.mu, g.sigma, rng) : g.mu;
}

}  // namespace

RolloutResult Model::rollout_agents(Tape& tape, const Batch& batch, const RolloutOptions& opt,
                                    Rng& rng) const {
  const int B = batch.B, K = batch.K, T = batch.T, N = B * K;
  const int Tb = sim_.T_b;
  const bool train = opt.mode == Mode::Train;
  const bool deterministic = cfg_.variant == Variant::TG_CRN;
  const bool global = cfg_.variant == Variant::GV_CRN;
  const bool sample_prior = !deterministic && (train || opt.sample_latents);
  const Tensor scale_rows = tile_rows(scale_, N);

  RolloutResult out;
  out.kl = out.recon = out.recon_burnin = out.kl_global = out.recon_global = zero(tape);

  Var h = tape.constant(Tensor(N, cfg_.hidden));
  Var hg = global ? tape.constant(Tensor(B, cfg_.hidden)) : Var{};
  Var x_cur = tape.constant(batch.x[0]);
  Var xg_cur = tape.constant(batch.xg[0]);

  for (int t = 0; t < T; ++t) {
    const bool posterior = train && !deterministic && t < Tb;
    const nn::Gaussian prior = prior_head_(tape, (*prior_block_)(tape, h, K));
    Var z;
    if (posterior) {
      Var xn = normalize(tape, tape.constant(batch.x[t + 1]), N);
      const nn::Gaussian q =
          enc_head_(tape, (*enc_block_)(tape, ad::concat_cols({xn, h}), K));
      z = ad::gaussian_sample(q.mu, q.sigma, rng);
      out.kl = out.kl + ad::kl_diag_gauss(q.mu, q.sigma, prior.mu, prior.sigma);
    } else {
      z = draw(prior, sample_prior, rng);
    }

    Var zg;
    if (global) {
      const nn::Gaussian gp = g_prior_head_(tape, g_prior_(tape, hg));
      if (posterior) {
        Var xg_next = tape.constant(batch.xg[t + 1]);
        const nn::Gaussian gq = g_enc_head_(tape, g_enc_(tape, ad::concat_cols({xg_next, hg})));
        zg = ad::gaussian_sample(gq.mu, gq.sigma, rng);
        out.kl_global = out.kl_global + ad::kl_diag_gauss(gq.mu, gq.sigma, gp.mu, gp.sigma);
      } else {
        zg = draw(gp, sample_prior, rng);
      }
    }

    Var zbar = ad::segment_mean(z, K);
    if (global) zbar = ad::concat_cols({zbar, zg});
    Var a_t = tape.constant(batch.a[t]);
    out.y_hat.push_back(outcome_(tape, ad::concat_cols({zbar, xg_cur, a_t})));
    out.a_logit.push_back(treat_.logits(tape, zbar));

    if (t == T - 1) break;

    const nn::Gaussian dec = dec_head_(tape, (*dec_block_)(tape, ad::concat_cols({z, h}), K));
    Var x_hat, xg_hat, nll;
    Tensor target;
    if (cfg_.theory()) {
      Var proposed = std::numbers::pi * ad::tanh(dec.mu);
      target = column(batch.x[t + 1], 4);
      nll = ad::gaussian_nll(tape.constant(target), proposed, dec.sigma);
      const TheoryStep step = theory_x(sim_, x_cur, proposed, batch.a[t], K);
      x_hat = step.x_local;
      xg_hat = step.x_global;
    } else {
      target = scaled_residual(batch.x[t + 1], batch.x[t], scale_);
      nll = ad::gaussian_nll(tape.constant(target), dec.mu, dec.sigma);
      x_hat = x_cur + dec.mu * tape.constant(scale_rows);
      const nn::Gaussian gd = g_dec_head_(tape, g_dec_(tape, ad::concat_cols({zg, hg})));
      Tensor g_target(B, 1);
      for (int b = 0; b < B; ++b) g_target(b, 0) = batch.xg[t + 1](b, 0) - batch.xg[t](b, 0);
      out.recon_global =
          out.recon_global + ad::gaussian_nll(tape.constant(g_target), gd.mu, gd.sigma);
      xg_hat = xg_cur + gd.mu;
    }
    out.recon = out.recon + nll;
    if (t < Tb) out.recon_burnin = out.recon_burnin + nll;
    out.dec_mu.push_back(dec.mu.value());
    out.dec_sigma.push_back(dec.sigma.value());
    out.recon_target.push_back(std::move(target));
    out.x_hat.push_back(x_hat);
    out.xg_hat.push_back(xg_hat);
    out.x_hat_norm.push_back(normalize(tape, x_hat, N));

    const bool observed = t + 1 < Tb;
    Var x_next = observed ? tape.constant(batch.x[t + 1]) : x_hat;
    Var xg_next = observed ? tape.constant(batch.xg[t + 1]) : xg_hat;
    h = gru_.step(tape, ad::concat_cols({normalize(tape, x_next, N), z}), h);
    if (global) hg = g_gru_.step(tape, ad::concat_cols({xg_next, zg}), hg);
    x_cur = x_next;
    xg_cur = xg_next;
  }
  return out;
}

RolloutResult Model::rollout_rnn(Tape& tape, const Batch& batch, const RolloutOptions&) const {
  const int B = batch.B, K = batch.K, T = batch.T, N = B * K;
  const int F = boid::kLocalFeatures;
  const Tensor scale_rows = tile_rows(scale_, N);

  RolloutResult out;
  out.kl = out.recon = out.recon_burnin = out.kl_global = out.recon_global = zero(tape);

  Var h = tape.constant(Tensor(B, cfg_.rnn_hidden));
  Var x_cur = tape.constant(batch.x[0]);
  Var xg_cur = tape.constant(batch.xg[0]);
  for (int t = 0; t < T; ++t) {
    Var flat = ad::reshape(normalize(tape, x_cur, N), B, K * F);
    Var a_t = tape.constant(batch.a[t]);
    out.a_logit.push_back(rnn_treat_(tape, ad::concat_cols({h, flat, xg_cur})));
    Var h1 = rnn_.step(tape, ad::concat_cols({flat, xg_cur, a_t}), h);
    out.y_hat.push_back(outcome_(tape, ad::concat_cols({h1, xg_cur, a_t})));
    if (t == T - 1) break;

    Var dx = ad::reshape(rnn_x_(tape, h1), N, F);
    Var x_hat = x_cur + dx * tape.constant(scale_rows);
    Var xg_hat = xg_cur + rnn_xg_(tape, h1);
    out.x_hat.push_back(x_hat);
    out.xg_hat.push_back(xg_hat);
    out.x_hat_norm.push_back(normalize(tape, x_hat, N));

    const bool observed = t + 1 < sim_.T_b;
    x_cur = observed ? tape.constant(batch.x[t + 1]) : x_hat;
    xg_cur = observed ? tape.constant(batch.xg[t + 1]) : xg_hat;
    h = h1;
  }
  return out;
}

}  // namespace tgvcrn::model
