#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "boid_oracle.hpp"
#include "tgvcrn/boid/dataset.hpp"
#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"
#include "tgvcrn/common/rng.hpp"

using namespace tgvcrn;
using namespace tgvcrn::boid;
namespace fs = std::filesystem;

namespace {

BoidState two_agents(double distance) {
  BoidState s;
  s.pos = {{0.0, 0.0}, {distance, 0.0}};
  s.head = {{1.0, 0.0}, {0.0, 1.0}};
  return s;
}

oracle::Params params(const SimConfig& c, double r_o) {
  return {c.speed, c.r_r, r_o, c.r_a, c.beta_rad(), c.box, c.dt, c.boundary_lookahead};
}

std::vector<oracle::Agent> to_oracle(const BoidState& s) {
  std::vector<oracle::Agent> a;
  for (int k = 0; k < s.size(); ++k) {
    a.push_back({s.pos[k].x, s.pos[k].y, std::atan2(s.head[k].y, s.head[k].x)});
  }
  return a;
}

BoidState random_state(const SimConfig& c, Rng& g, double spread) {
  BoidState s;
  for (int k = 0; k < c.K; ++k) {
    s.pos.push_back({g.uniform(-spread, spread), g.uniform(-spread, spread)});
    const double a = g.uniform(-std::numbers::pi, std::numbers::pi);
    s.head.push_back({std::cos(a), std::sin(a)});
  }
  return s;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tgvcrn_boid_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("zone boundaries: repulsion is open, orientation and attraction are closed") {
  SimConfig c;
  CHECK(zone_neighbors(two_agents(0.49), 0, c.r_o_control, c).n_r == 1);
  CHECK(zone_neighbors(two_agents(c.r_r), 0, c.r_o_control, c).n_o == 1);
  CHECK(zone_neighbors(two_agents(c.r_o_control), 0, c.r_o_control, c).n_o == 1);
  CHECK(zone_neighbors(two_agents(1.01), 0, c.r_o_control, c).n_a == 1);
  CHECK(zone_neighbors(two_agents(1.01), 0, c.r_o_treated, c).n_o == 1);
  CHECK(zone_neighbors(two_agents(c.r_a), 0, c.r_o_control, c).n_a == 1);
  const auto far = zone_neighbors(two_agents(7.6), 0, c.r_o_control, c);
  CHECK(far.n_r + far.n_o + far.n_a == 0);
  CHECK_THROWS_AS(zone_neighbors(two_agents(1.0), 2, 1.0, c), ContractError);
}

TEST_CASE("repulsion takes priority over alignment") {
  SimConfig c;
  BoidState s;
  s.pos = {{0, 0}, {0.3, 0}, {0, 0.8}};
  s.head = {{0, 1}, {0, 1}, {1, 0}};
  const Vec2 d = desired_direction(s, 0, c.r_o_control, c);
  CHECK(d.x == doctest::Approx(-1.0));
  CHECK(d.y == doctest::Approx(0.0));
}

TEST_CASE("orientation and attraction are averaged with equal weight") {
  SimConfig c;
  BoidState s;
  s.pos = {{0, 0}, {0.8, 0}, {0, 5}};
  s.head = {{1, 0}, {1, 0}, {0, -1}};
  const Vec2 d = desired_direction(s, 0, c.r_o_control, c);
  CHECK(d.x == doctest::Approx(std::sqrt(0.5)));
  CHECK(d.y == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("isolated agents keep their heading") {
  SimConfig c;
  BoidState s = two_agents(9.0);
  CHECK(desired_direction(s, 0, c.r_o_control, c) == s.head[0]);
}

TEST_CASE("turns are limited to beta in the right direction") {
  const double beta = 30.0 * std::numbers::pi / 180.0;
  const Vec2 east{1, 0};
  const Vec2 small{std::cos(0.2), std::sin(0.2)};
  CHECK(clamp_turn(east, small, beta) == small);
  const Vec2 left = clamp_turn(east, {0, 1}, beta);
  CHECK(signed_angle(east, left) == doctest::Approx(beta));
  const Vec2 right = clamp_turn(east, {0, -1}, beta);
  CHECK(signed_angle(east, right) == doctest::Approx(-beta));
  const Vec2 back = clamp_turn(east, {-1, 0}, beta);
  CHECK(signed_angle(east, back) == doctest::Approx(beta));
}

TEST_CASE("angular momentum of a rotating ring is one, of a parallel group zero") {
  BoidState ring, parallel;
  for (int k = 0; k < 12; ++k) {
    const double a = 2 * std::numbers::pi * k / 12;
    ring.pos.push_back({3 * std::cos(a), 3 * std::sin(a)});
    ring.head.push_back({-std::sin(a), std::cos(a)});
    parallel.pos.push_back({3 * std::cos(a), 3 * std::sin(a)});
    parallel.head.push_back({1, 0});
  }
  CHECK(mean_angular_momentum(ring) == doctest::Approx(1.0));
  CHECK(mean_angular_momentum(parallel) == doctest::Approx(0.0).epsilon(1e-12));
  BoidState lone = two_agents(0.0);
  CHECK(mean_angular_momentum(lone) == 0.0);
}

TEST_CASE("property: one step matches the angle-based oracle") {
  SimConfig c;
  Rng g(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const BoidState s = random_state(c, g, trial % 2 ? 3.0 : c.box * 0.95);
    const double r_o = trial % 3 ? c.r_o_control : c.r_o_treated;
    const BoidState mine = step(s, r_o, c);
    const auto ref = oracle::step(to_oracle(s), params(c, r_o));
    for (int k = 0; k < c.K; ++k) {
      CHECK(std::abs(mine.pos[k].x - ref[k].x) < 1e-12);
      CHECK(std::abs(mine.pos[k].y - ref[k].y) < 1e-12);
      CHECK(std::abs(mine.head[k].x - std::cos(ref[k].psi)) < 1e-12);
      CHECK(std::abs(mine.head[k].y - std::sin(ref[k].psi)) < 1e-12);
    }
    CHECK(std::abs(mean_angular_momentum(mine) - oracle::angular_momentum(ref)) < 1e-12);
  }
}

TEST_CASE("property: long runs keep unit speed, limited turns and stay in the box") {
  SimConfig c;
  for (int seed = 0; seed < 3; ++seed) {
    BoidState s = initial_state(c, 500 + seed);
    for (int t = 0; t < 3000; ++t) {
      const BoidState n = step(s, (t / 300) % 2 ? c.r_o_treated : c.r_o_control, c);
      for (int k = 0; k < c.K; ++k) {
        REQUIRE(std::abs(signed_angle(s.head[k], n.head[k])) <= c.beta_rad() + 1e-12);
        REQUIRE(std::abs(n.head[k].norm() - 1.0) < 1e-12);
        REQUIRE(inside_box(n.pos[k], c));
        REQUIRE((n.pos[k] - s.pos[k]).norm() == doctest::Approx(c.speed * c.dt));
      }
      s = n;
    }
  }
}

TEST_CASE("episode layout") {
  SimConfig c;
  std::vector<BoidState> states;
  const TrajectorySample e = simulate_states(c, 77, 10, &states);
  REQUIRE(states.size() == static_cast<std::size_t>(c.T + 1));
  for (int t = 0; t < c.T; ++t) {
    CHECK(e.treatment[t] == (t >= 10 ? 1 : 0));
    CHECK(e.x_global[t] == mean_angular_momentum(states[t]));
    CHECK(e.outcome[t] == mean_angular_momentum(states[t + 1]));
    for (int k = 0; k < c.K; ++k) {
      CHECK(e.local(t, k, 0) == states[t].pos[k].x);
      CHECK(e.local(t, k, 3) == c.speed * states[t].head[k].y);
      const double turn = t == 0 ? 0.0 : signed_angle(states[t - 1].head[k], states[t].head[k]);
      CHECK(e.local(t, k, 4) == turn);
    }
  }
  CHECK(e.intervention == 10);
  CHECK_THROWS_AS(simulate(c, 1, 3), ConfigError);
  CHECK(simulate(c, 1, {}).intervention == -1);
}

TEST_CASE("arms share their history until the intervention") {
  SimConfig c;
  const auto none = simulate(c, 5, {});
  const auto early = simulate(c, 5, c.ti_first);
  for (int t = 0; t <= c.ti_first; ++t) {
    for (int k = 0; k < c.K; ++k) CHECK(none.local(t, k, 0) == early.local(t, k, 0));
  }
  CHECK(none.outcome[c.ti_first - 1] == early.outcome[c.ti_first - 1]);
}

TEST_CASE("assignment: about a third never treated, the rest uniform over the window") {
  SimConfig c;
  std::vector<int> counts(c.num_timings() + 1, 0);
  const int n = 3000;
  for (int i = 0; i < n; ++i) {
    const int a = assigned_intervention(c, 9, "train", i);
    if (a < 0) {
      ++counts.back();
    } else {
      REQUIRE(a >= c.ti_first);
      REQUIRE(a <= c.ti_last);
      ++counts[a - c.ti_first];
    }
  }
  CHECK(std::abs(counts.back() / double(n) - 1.0 / 3.0) < 0.03);
  for (int j = 0; j < c.num_timings(); ++j) CHECK(std::abs(counts[j] / double(n) - 2.0 / 15.0) < 0.03);
}

TEST_CASE("counterfactual set holds every timing plus the untreated arm") {
  SimConfig c;
  const CounterfactualSet cf = counterfactual_set(c, 4, 10);
  CHECK(cf.rollouts.size() == 60);
  CHECK(cf.arms() == 6);
  CHECK(cf.timings == std::vector<int>{9, 10, 11, 12, 13});
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(cf.arm(i, j).intervention == cf.timings[j]);
    CHECK(cf.never(i).intervention == -1);
    CHECK(cf.arm(i, 0).x_local[0] == cf.never(i).x_local[0]);
  }
  CHECK_NOTHROW(cf.validate());
  CounterfactualSet broken = cf;
  broken.rollouts.pop_back();
  CHECK_THROWS_AS(broken.validate(), ContractError);
}

TEST_CASE("ground-truth effects are differences of final outcomes") {
  SimConfig c;
  const CounterfactualSet cf = counterfactual_set(c, 4, 3);
  const IteTable ite = ground_truth_ite(cf);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) {
      CHECK(ite.at(i, j) == cf.arm(i, j).outcome.back() - cf.never(i).outcome.back());
    }
  }
}

TEST_CASE("dataset generation is deterministic and round-trips through disk") {
  SimConfig c;
  c.K = 6;
  const Dataset a = generate_dataset(c, 5, 3, 4, 11);
  const Dataset b = generate_dataset(c, 5, 3, 4, 11);
  CHECK(a.train == b.train);
  CHECK(a.test_cf.rollouts == b.test_cf.rollouts);
  const Dataset other = generate_dataset(c, 5, 3, 4, 12);
  CHECK_FALSE(a.train == other.train);

  const fs::path dir = scratch("roundtrip");
  write_dataset(a, dir);
  const Dataset r = read_dataset(dir);
  CHECK(r.sim == c);
  CHECK(r.seed == 11);
  REQUIRE(r.train.size() == 5);
  REQUIRE(r.test_cf.rollouts.size() == 4 * 6);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(r.train[i].intervention == a.train[i].intervention);
    CHECK(r.train[i].treatment == a.train[i].treatment);
    for (std::size_t j = 0; j < a.train[i].x_local.size(); ++j) {
      CHECK(r.train[i].x_local[j] == static_cast<double>(static_cast<float>(a.train[i].x_local[j])));
    }
  }
  // Reading back and writing again is byte-identical.
  const fs::path again = scratch("roundtrip2");
  write_dataset(r, again);
  for (const char* split : {"train", "test_cf"}) {
    for (const char* f : {"manifest.txt", "x_local.f32", "outcome.f32", "treatment.u8"}) {
      CHECK(io::sha256_file(dir / split / f) == io::sha256_file(again / split / f));
    }
  }
}

TEST_CASE("f64 episode dumps are lossless") {
  SimConfig c;
  c.K = 4;
  std::vector<TrajectorySample> eps{simulate(c, 1, {}), simulate(c, 2, 11)};
  const fs::path dir = scratch("f64");
  write_episodes(dir, "dump", eps, c, 99, true);
  SimConfig back;
  std::uint64_t seed = 0;
  CHECK(read_episodes(dir, &back, &seed) == eps);
  CHECK(back == c);
  CHECK(seed == 99);
}

TEST_CASE("sim config validation and text round-trip") {
  SimConfig c;
  c.dt = 0.7;
  c.K = 9;
  KeyValueConfig kv;
  sim_to_config(c, kv);
  CHECK(sim_from_config(KeyValueConfig::parse(kv.to_text())) == c);
  SimConfig bad;
  bad.r_r = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SimConfig{};
  bad.ti_first = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SimConfig{};
  bad.T_b = 14;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("ground-truth effect is positive on average") {
  SimConfig c;
  const CounterfactualSet cf = counterfactual_set(c, derive_seed(1, "data", 0), 200);
  const double m = ground_truth_ite(cf).mean();
  CHECK(m > 0.02);
  CHECK(m < 0.30);
}
