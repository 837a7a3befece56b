#include "tgvcrn/boid/sim.hpp"

#include <numbers>

#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::boid {
namespace {

Vec2 unit_or_zero(Vec2 v) {
  const double n = v.norm();
  if (n == 0.0) return {0.0, 0.0};
  return v * (1.0 / n);
}

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

bool continuation_exits(Vec2 p, Vec2 d, const SimConfig& cfg) {
  return !inside_box(p + d * (cfg.boundary_lookahead * cfg.speed * cfg.dt), cfg);
}

}  // namespace

double SimConfig::beta_rad() const { return beta_deg * std::numbers::pi / 180.0; }

void SimConfig::validate() const {
  auto fail = [](const char* what) { throw ConfigError(std::string("sim config: ") + what); };
  if (K < 1) fail("K must be >= 1");
  if (!(speed > 0.0)) fail("speed must be positive");
  if (!(r_r > 0.0 && r_r < r_o_control && r_r < r_o_treated)) fail("need 0 < r_r < r_o");
  if (!(r_o_control < r_a && r_o_treated < r_a)) fail("need r_o < r_a");
  if (!(beta_deg > 0.0 && beta_deg <= 180.0)) fail("beta must be in (0, 180]");
  if (!(box > 0.0)) fail("box must be positive");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(boundary_lookahead > 0.0)) fail("boundary_lookahead must be positive");
  if (!(init_spread > 0.0 && init_spread <= 1.0)) fail("init_spread must be in (0, 1]");
  if (T < 2) fail("T must be >= 2");
  if (!(T_b >= 1 && T_b < T)) fail("need 1 <= T_b < T");
  if (!(ti_first >= T_b && ti_first <= ti_last && ti_last < T)) {
    fail("intervention window must lie in [T_b, T)");
  }
  if (!(never_treated_fraction >= 0.0 && never_treated_fraction <= 1.0)) {
    fail("never_treated_fraction must be in [0, 1]");
  }
}

bool inside_box(Vec2 p, const SimConfig& cfg) {
  return std::abs(p.x) <= cfg.box && std::abs(p.y) <= cfg.box;
}

double signed_angle(Vec2 a, Vec2 b) { return std::atan2(cross(a, b), dot(a, b)); }

ZoneCounts zone_neighbors(const BoidState& s, int k, double r_o, const SimConfig& cfg) {
  if (k < 0 || k >= s.size()) throw ContractError("zone_neighbors: agent index out of range");
  ZoneCounts c;
  for (int j = 0; j < s.size(); ++j) {
    if (j == k) continue;
    const double d = (s.pos[j] - s.pos[k]).norm();
    if (d < cfg.r_r) {
      ++c.n_r;
    } else if (d <= r_o) {
      ++c.n_o;
    } else if (d <= cfg.r_a) {
      ++c.n_a;
    }
  }
  return c;
}

Vec2 desired_direction(const BoidState& s, int k, double r_o, const SimConfig& cfg) {
  if (k < 0 || k >= s.size()) throw ContractError("desired_direction: agent index out of range");
  const Vec2 p = s.pos[k];
  Vec2 repel, align, attract;
  int n_r = 0, n_o = 0, n_a = 0;
  for (int j = 0; j < s.size(); ++j) {
    if (j == k) continue;
    const Vec2 rel = s.pos[j] - p;
    const double d = rel.norm();
    if (d < cfg.r_r) {
      repel += unit_or_zero(rel);
      ++n_r;
    } else if (d <= r_o) {
      align += s.head[j];
      ++n_o;
    } else if (d <= cfg.r_a) {
      attract += rel * (1.0 / d);
      ++n_a;
    }
  }
  const Vec2 current = s.head[k];
  if (n_r > 0) {
    const Vec2 away = unit_or_zero(repel * -1.0);
    return away.norm() > 0.0 ? away : current;
  }
  Vec2 blend;
  if (n_o > 0) blend += unit_or_zero(align * (1.0 / n_o)) * 0.5;
  if (n_a > 0) blend += unit_or_zero(attract * (1.0 / n_a)) * 0.5;
  const Vec2 d = unit_or_zero(blend);
  return d.norm() > 0.0 ? d : current;
}

Vec2 clamp_turn(Vec2 d_old, Vec2 d_desired, double beta) {
  const double theta = signed_angle(d_old, d_desired);
  if (std::abs(theta) <= beta + 1e-12) return d_desired;
  const double sign = cross(d_old, d_desired) < 0.0 ? -1.0 : 1.0;
  return unit_or_zero(rotate(d_old, sign * beta));
}

double mean_angular_momentum(const BoidState& s) {
  const int K = s.size();
  if (K < 1) throw ContractError("mean_angular_momentum: empty state");
  Vec2 centroid;
  for (const auto& p : s.pos) centroid += p;
  centroid = centroid * (1.0 / K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const Vec2 r = s.pos[k] - centroid;
    const double n = r.norm();
    if (n == 0.0) continue;
    total += cross(r * (1.0 / n), s.head[k]);
  }
  return std::min(1.0, std::abs(total) / K);
}

BoidState step(const BoidState& s, double r_o, const SimConfig& cfg) {
  const double beta = cfg.beta_rad();
  BoidState next = s;
  for (int k = 0; k < s.size(); ++k) {
    const Vec2 p = s.pos[k];
    const Vec2 d_old = s.head[k];
    Vec2 desired = desired_direction(s, k, r_o, cfg);
    const Vec2 to_center = unit_or_zero(p * -1.0);
    if (to_center.norm() > 0.0 &&
        (continuation_exits(p, d_old, cfg) ||
         continuation_exits(p, clamp_turn(d_old, desired, beta), cfg))) {
      desired = to_center;
    }
    Vec2 d_new = clamp_turn(d_old, desired, beta);
    d_new = d_new * (1.0 / d_new.norm());
    next.head[k] = d_new;
    next.pos[k] = p + d_new * (cfg.speed * cfg.dt);
  }
  return next;
}

}  // namespace tgvcrn::boid
