#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace tgvcrn::boid {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

struct SimConfig {
  int K = 20;
  double speed = 1.0;
  double r_r = 0.5;
  double r_o_control = 1.0;
  double r_o_treated = 4.0;
  double r_a = 7.5;
  double beta_deg = 30.0;
  double box = 15.0;  // half-extent; the arena is [-box, box]^2
  double dt = 1.5;
  double boundary_lookahead = 5.0;  // in step lengths (speed*dt)
  double init_spread = 0.5;  // initial positions uniform in [-spread*box, spread*box]^2
  int T = 14;
  int T_b = 9;
  int ti_first = 9;  // intervention window, inclusive step indices
  int ti_last = 13;
  double never_treated_fraction = 1.0 / 3.0;

  double beta_rad() const;
  int num_timings() const { return ti_last - ti_first + 1; }
  // Throws ConfigError on inconsistent values.
  void validate() const;
  bool operator==(const SimConfig&) const = default;
};

struct BoidState {
  std::vector<Vec2> pos;
  std::vector<Vec2> head;  // unit vectors

  int size() const { return static_cast<int>(pos.size()); }
  bool operator==(const BoidState&) const = default;
};

struct ZoneCounts {
  int n_r = 0;
  int n_o = 0;
  int n_a = 0;
};

ZoneCounts zone_neighbors(const BoidState& s, int k, double r_o, const SimConfig& cfg);

// Flocking rule without boundary handling.
Vec2 desired_direction(const BoidState& s, int k, double r_o, const SimConfig& cfg);

// Turn from d_old toward d_desired by at most beta (radians).
Vec2 clamp_turn(Vec2 d_old, Vec2 d_desired, double beta);

double mean_angular_momentum(const BoidState& s);

// One synchronous update of all agents.
BoidState step(const BoidState& s, double r_o, const SimConfig& cfg);

// Signed angle (radians) that rotates a onto b.
double signed_angle(Vec2 a, Vec2 b);

bool inside_box(Vec2 p, const SimConfig& cfg);

}  // namespace tgvcrn::boid
