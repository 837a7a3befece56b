#include "tgvcrn/train/loss.hpp"

#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::train {

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(gamma >= 0.0) || !(lambda >= 0.0)) {
    throw ConfigError("loss weights must be nonnegative");
  }
}

double combine(double y, double gvrnn, double x, double a, const LossWeights& w) {
  return y + w.alpha * gvrnn + w.gamma * x + w.lambda * a;
}

LossComponents LossTerms::values() const {
  return {total.value().item(), y.value().item(), x.value().item(), a.value().item(),
          gvrnn.value().item()};
}

LossTerms loss_total(model::Tape& tape, const model::Model& m, const model::RolloutResult& r,
                     const model::Batch& batch, const LossWeights& w) {
  w.validate();
  const int B = batch.B, K = batch.K, T = batch.T, N = B * K;
  const int F = boid::kLocalFeatures;
  const int Tb = m.sim().T_b;
  const auto& scale = m.feature_scale();

  LossTerms L;
  L.y = tape.constant(model::Tensor::scalar(0.0));
  L.a = L.y;
  L.x = L.y;
  for (int t = 0; t < T; ++t) {
    L.y = L.y + ad::sum(ad::square(r.y_hat[t] - tape.constant(batch.y[t])));
    L.a = L.a + ad::bce_with_logits(r.a_logit[t], tape.constant(batch.a[t]));
  }
  for (int t = 0; t + 1 < T; ++t) {
    model::Tensor target(N, F);
    for (int i = 0; i < N; ++i) {
      for (int f = 0; f < F; ++f) target(i, f) = batch.x[t + 1](i, f) / scale(0, f);
    }
    Var local = ad::sum(ad::square(r.x_hat_norm[t] - tape.constant(std::move(target))));
    Var global = ad::sum(ad::square(r.xg_hat[t] - tape.constant(batch.xg[t + 1])));
    L.x = L.x + local * (1.0 / (K * F)) + global;
  }
  L.y = L.y * (1.0 / (B * T));
  L.a = L.a * (1.0 / (B * T));
  L.x = L.x * (1.0 / (B * (T - 1)));
  L.gvrnn = r.recon * (1.0 / (B * (T - 1) * K)) + r.kl * (1.0 / (B * Tb * K)) +
            r.recon_global * (1.0 / (B * (T - 1))) + r.kl_global * (1.0 / (B * Tb));
  L.total = L.y + w.alpha * L.gvrnn + w.gamma * L.x + w.lambda * L.a;
  return L;
}

}  // namespace tgvcrn::train
