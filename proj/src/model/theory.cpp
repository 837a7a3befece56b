#include "tgvcrn/model/theory.hpp"

#include <cmath>
#include <memory>

namespace tgvcrn::model {
namespace {

constexpr double kTiny = 1e-12;

Var col(Var x, int c) { return ad::slice_cols(x, c, 1); }

Var group_mean_repeated(Var v, int K) { return ad::segment_repeat(ad::segment_mean(v, K), K); }

// Angle of (1, 0) -> (cos d, sin d) mapped into (-pi, pi].
Var wrap(Var d) { return ad::atan2(ad::sin(d), ad::cos(d)); }

}  // namespace

Var angular_momentum(Var px, Var py, Var hx, Var hy, int K) {
  Var rx = px - group_mean_repeated(px, K);
  Var ry = py - group_mean_repeated(py, K);
  Var r = ad::sqrt(ad::square(rx) + ad::square(ry) + kTiny);
  Var cross = (rx * hy - ry * hx) / r;
  return ad::abs(ad::segment_mean(cross, K));
}

TheoryStep theory_x(const boid::SimConfig& sim, Var x_cur, Var proposed_turn,
                    const Tensor& treated, int K) {
  ad::Tape& tape = *x_cur.tape;
  const int N = x_cur.rows();
  const int B = N / K;
  const double beta = sim.beta_rad();

  Var px = col(x_cur, 0);
  Var py = col(x_cur, 1);
  Var hx = col(x_cur, 2) * (1.0 / sim.speed);
  Var hy = col(x_cur, 3) * (1.0 / sim.speed);
  Var psi_old = ad::atan2(hy, hx);
  Var proposal = ad::clamp(proposed_turn, -beta, beta);
  Var psi_prop = psi_old + proposal;

  // Rule selection uses the current values only; the masks carry no gradient.
  const Tensor& X = x_cur.value();
  Tensor attract(N, 1), orient(N, 1), keep(N, 1);
  auto blocks = std::make_shared<std::vector<double>>(static_cast<std::size_t>(B) * K * K, 0.0);
  for (int b = 0; b < B; ++b) {
    const double r_o = treated(b, 0) > 0.5 ? sim.r_o_treated : sim.r_o_control;
    double cx = 0.0, cy = 0.0;
    for (int k = 0; k < K; ++k) {
      cx += X(b * K + k, 0);
      cy += X(b * K + k, 1);
    }
    cx /= K;
    cy /= K;
    for (int k = 0; k < K; ++k) {
      const int row = b * K + k;
      const double dc = std::hypot(X(row, 0) - cx, X(row, 1) - cy);
      int n_r = 0, n_o = 0;
      for (int j = 0; j < K; ++j) {
        if (j == k) continue;
        const double d = std::hypot(X(b * K + j, 0) - X(row, 0), X(b * K + j, 1) - X(row, 1));
        if (d < sim.r_r) {
          ++n_r;
        } else if (d <= r_o) {
          ++n_o;
        }
      }
      if (dc > sim.r_a / 2.0) {
        attract(row, 0) = 1.0;
      } else if (n_o > 0 && n_r == 0) {
        orient(row, 0) = 1.0;
        double* m = blocks->data() + (static_cast<std::size_t>(b) * K + k) * K;
        for (int j = 0; j < K; ++j) {
          if (j == k) continue;
          const double d =
              std::hypot(X(b * K + j, 0) - X(row, 0), X(b * K + j, 1) - X(row, 1));
          if (d >= sim.r_r && d <= r_o) m[j] = 1.0 / n_o;
        }
      } else {
        keep(row, 0) = 1.0;
      }
    }
  }

  // Attraction: head for the centroid.
  Var psi_attr = ad::atan2(group_mean_repeated(py, K) - py, group_mean_repeated(px, K) - px);
  // Orientation: half proposed heading, half neighbors' mean heading.
  Var mx = ad::segment_matmul(blocks, hx, K);
  Var my = ad::segment_matmul(blocks, hy, K);
  Var mn = ad::sqrt(ad::square(mx) + ad::square(my) + kTiny);
  Var bx = 0.5 * ad::cos(psi_prop) + 0.5 * (mx / mn);
  Var by = 0.5 * ad::sin(psi_prop) + 0.5 * (my / mn);
  Var psi_orient = ad::atan2(by, bx);

  Var turn = tape.constant(attract) * wrap(psi_attr - psi_old) +
             tape.constant(orient) * wrap(psi_orient - psi_old) + tape.constant(keep) * proposal;
  turn = ad::clamp(turn, -beta, beta);

  Var psi_new = psi_old + turn;
  Var nhx = ad::cos(psi_new);
  Var nhy = ad::sin(psi_new);
  const double stride = sim.speed * sim.dt;
  Var npx = px + stride * nhx;
  Var npy = py + stride * nhy;
  TheoryStep out;
  out.turn = turn;
  out.x_local = ad::concat_cols({npx, npy, sim.speed * nhx, sim.speed * nhy, turn});
  out.x_global = angular_momentum(npx, npy, nhx, nhy, K);
  return out;
}

}  // namespace tgvcrn::model
