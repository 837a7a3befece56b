#pragma once

// Second implementation of the flocking step, written over heading angles
// instead of vectors. Used to cross-check the library simulator.

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

struct Agent {
  double x, y, psi;
};

struct Params {
  double speed, r_r, r_o, r_a, beta, box, dt, lookahead;
};

inline double wrap(double a) {
  while (a > std::numbers::pi) a -= 2 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2 * std::numbers::pi;
  return a;
}

inline bool leaves_box(double x, double y, double psi, const Params& p) {
  const double L = p.lookahead * p.speed * p.dt;
  const double nx = x + L * std::cos(psi), ny = y + L * std::sin(psi);
  return std::abs(nx) > p.box || std::abs(ny) > p.box;
}

// Heading after turning from psi toward the direction angle `goal` by at most beta.
inline double limited(double psi, double goal, const Params& p) {
  const double d = wrap(goal - psi);
  if (std::abs(d) <= p.beta + 1e-12) return goal;
  return psi + (d < 0 ? -p.beta : p.beta);
}

inline std::vector<Agent> step(const std::vector<Agent>& s, const Params& p) {
  const int n = static_cast<int>(s.size());
  std::vector<Agent> out(n);
  for (int i = 0; i < n; ++i) {
    double rx = 0, ry = 0, ox = 0, oy = 0, ax = 0, ay = 0;
    int nr = 0, no = 0, na = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = s[j].x - s[i].x, dy = s[j].y - s[i].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < p.r_r) {
        if (d > 0) {
          rx += dx / d;
          ry += dy / d;
        }
        ++nr;
      } else if (d <= p.r_o) {
        ox += std::cos(s[j].psi);
        oy += std::sin(s[j].psi);
        ++no;
      } else if (d <= p.r_a) {
        ax += dx / d;
        ay += dy / d;
        ++na;
      }
    }
    double goal = s[i].psi;
    if (nr > 0) {
      if (rx != 0 || ry != 0) goal = std::atan2(-ry, -rx);
    } else {
      double bx = 0, by = 0;
      if (no > 0 && (ox != 0 || oy != 0)) {
        const double m = std::sqrt(ox * ox + oy * oy);
        bx += 0.5 * ox / m;
        by += 0.5 * oy / m;
      }
      if (na > 0 && (ax != 0 || ay != 0)) {
        const double m = std::sqrt(ax * ax + ay * ay);
        bx += 0.5 * ax / m;
        by += 0.5 * ay / m;
      }
      if (bx != 0 || by != 0) goal = std::atan2(by, bx);
    }
    const bool off_center = s[i].x != 0 || s[i].y != 0;
    if (off_center && (leaves_box(s[i].x, s[i].y, s[i].psi, p) ||
                       leaves_box(s[i].x, s[i].y, limited(s[i].psi, goal, p), p))) {
      goal = std::atan2(-s[i].y, -s[i].x);
    }
    const double psi = limited(s[i].psi, goal, p);
    out[i] = {s[i].x + p.speed * p.dt * std::cos(psi), s[i].y + p.speed * p.dt * std::sin(psi),
              psi};
  }
  return out;
}

inline double angular_momentum(const std::vector<Agent>& s) {
  double cx = 0, cy = 0;
  for (const auto& a : s) {
    cx += a.x;
    cy += a.y;
  }
  cx /= s.size();
  cy /= s.size();
  double total = 0;
  for (const auto& a : s) {
    const double rx = a.x - cx, ry = a.y - cy;
    const double r = std::sqrt(rx * rx + ry * ry);
    if (r > 0) total += (rx * std::sin(a.psi) - ry * std::cos(a.psi)) / r;
  }
  return std::min(1.0, std::abs(total) / s.size());
}

}  // namespace oracle
