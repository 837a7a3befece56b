#include "tgvcrn/boid/episode.hpp"

#include <numbers>

#include "tgvcrn/common/errors.hpp"
#include "tgvcrn/common/rng.hpp"

namespace tgvcrn::boid {

BoidState initial_state(const SimConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  BoidState s;
  s.pos.resize(cfg.K);
  s.head.resize(cfg.K);
  const double half = cfg.box * cfg.init_spread;
  for (int k = 0; k < cfg.K; ++k) {
    s.pos[k] = {rng.uniform(-half, half), rng.uniform(-half, half)};
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.head[k] = {std::cos(a), std::sin(a)};
  }
  return s;
}

TrajectorySample simulate_states(const SimConfig& cfg, std::uint64_t seed,
                                 std::optional<int> intervention,
                                 std::vector<BoidState>* states) {
  cfg.validate();
  if (intervention && (*intervention < cfg.ti_first || *intervention > cfg.ti_last)) {
    throw ConfigError("intervention step " + std::to_string(*intervention) +
                      " outside the intervention window");
  }
  const int T = cfg.T;
  const int K = cfg.K;
  TrajectorySample out;
  out.T = T;
  out.K = K;
  out.x_local.assign(static_cast<std::size_t>(T) * K * kLocalFeatures, 0.0);
  out.x_global.assign(T, 0.0);
  out.treatment.assign(T, 0);
  out.outcome.assign(T, 0.0);
  out.intervention = intervention ? *intervention : -1;

  BoidState cur = initial_state(cfg, seed);
  if (states) {
    states->clear();
    states->push_back(cur);
  }
  BoidState prev = cur;
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      double* row = &out.x_local[(static_cast<std::size_t>(t) * K + k) * kLocalFeatures];
      row[0] = cur.pos[k].x;
      row[1] = cur.pos[k].y;
      row[2] = cfg.speed * cur.head[k].x;
      row[3] = cfg.speed * cur.head[k].y;
      row[4] = t == 0 ? 0.0 : signed_angle(prev.head[k], cur.head[k]);
    }
    out.x_global[t] = mean_angular_momentum(cur);
    const bool treated = intervention && t >= *intervention;
    out.treatment[t] = treated ? 1 : 0;
    BoidState next = step(cur, treated ? cfg.r_o_treated : cfg.r_o_control, cfg);
    out.outcome[t] = mean_angular_momentum(next);
    if (states) states->push_back(next);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return out;
}

TrajectorySample simulate(const SimConfig& cfg, std::uint64_t seed,
                          std::optional<int> intervention) {
  return simulate_states(cfg, seed, intervention, nullptr);
}

BoidState state_at(const TrajectorySample& s, int t, double speed) {
  BoidState b;
  b.pos.resize(s.K);
  b.head.resize(s.K);
  for (int k = 0; k < s.K; ++k) {
    b.pos[k] = {s.local(t, k, 0), s.local(t, k, 1)};
    b.head[k] = {s.local(t, k, 2) / speed, s.local(t, k, 3) / speed};
  }
  return b;
}

}  // namespace tgvcrn::boid
