#include "tgvcrn/boid/dataset.hpp"

#include <map>
#include <sstream>

#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"
#include "tgvcrn/common/rng.hpp"

namespace tgvcrn::boid {

namespace fs = std::filesystem;

void CounterfactualSet::validate() const {
  if (timings.empty()) throw ContractError("counterfactual set has no intervention timings");
  if (rollouts.size() != static_cast<std::size_t>(n_episodes) * arms()) {
    throw ContractError("counterfactual set expects " + std::to_string(n_episodes * arms()) +
                        " rollouts, found " + std::to_string(rollouts.size()));
  }
  for (int i = 0; i < n_episodes; ++i) {
    for (int j = 0; j < arms(); ++j) {
      const int expect = j + 1 < arms() ? timings[j] : -1;
      if (arm(i, j).intervention != expect) {
        throw ContractError("counterfactual rollout " + std::to_string(i) + "/" +
                            std::to_string(j) + " has the wrong intervention step");
      }
    }
  }
}

int assigned_intervention(const SimConfig& cfg, std::uint64_t root, const std::string& split,
                          int index) {
  Rng rng(derive_seed(root, split + "/assign", index));
  if (rng.uniform() < cfg.never_treated_fraction) return -1;
  return cfg.ti_first + static_cast<int>(rng.uniform_index(cfg.num_timings()));
}

TrajectorySample factual_episode(const SimConfig& cfg, std::uint64_t root,
                                 const std::string& split, int index) {
  const int t = assigned_intervention(cfg, root, split, index);
  return simulate(cfg, derive_seed(root, split, index),
                  t < 0 ? std::nullopt : std::optional<int>(t));
}

CounterfactualSet counterfactual_set(const SimConfig& cfg, std::uint64_t root, int n_episodes) {
  CounterfactualSet cf;
  cf.n_episodes = n_episodes;
  for (int t = cfg.ti_first; t <= cfg.ti_last; ++t) cf.timings.push_back(t);
  cf.rollouts.reserve(static_cast<std::size_t>(n_episodes) * cf.arms());
  for (int i = 0; i < n_episodes; ++i) {
    const std::uint64_t seed = derive_seed(root, "test", i);
    for (int t : cf.timings) cf.rollouts.push_back(simulate(cfg, seed, t));
    cf.rollouts.push_back(simulate(cfg, seed, std::nullopt));
  }
  return cf;
}

Dataset generate_dataset(const SimConfig& cfg, int n_train, int n_val, int n_test,
                         std::uint64_t seed) {
  cfg.validate();
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw ConfigError("dataset split sizes must be positive");
  }
  Dataset ds;
  ds.sim = cfg;
  ds.seed = seed;
  for (int i = 0; i < n_train; ++i) ds.train.push_back(factual_episode(cfg, seed, "train", i));
  for (int i = 0; i < n_val; ++i) ds.val.push_back(factual_episode(cfg, seed, "val", i));
  for (int i = 0; i < n_test; ++i) ds.test.push_back(factual_episode(cfg, seed, "test", i));
  ds.test_cf = counterfactual_set(cfg, seed, n_test);
  return ds;
}

double IteTable::mean() const {
  double s = 0.0;
  for (double v : tau) s += v;
  return tau.empty() ? 0.0 : s / static_cast<double>(tau.size());
}

IteTable ground_truth_ite(const CounterfactualSet& cf) {
  cf.validate();
  IteTable table;
  table.n_episodes = cf.n_episodes;
  table.n_timings = static_cast<int>(cf.timings.size());
  for (int i = 0; i < cf.n_episodes; ++i) {
    const auto& none = cf.never(i);
    const double y0 = none.outcome[none.T - 1];
    for (int j = 0; j < table.n_timings; ++j) {
      const auto& arm = cf.arm(i, j);
      table.tau.push_back(arm.outcome[arm.T - 1] - y0);
    }
  }
  return table;
}

SimConfig sim_from_config(const KeyValueConfig& c) {
  SimConfig s;
  s.K = static_cast<int>(c.get_int("sim.K", s.K));
  s.speed = c.get_double("sim.speed", s.speed);
  s.r_r = c.get_double("sim.r_r", s.r_r);
  s.r_o_control = c.get_double("sim.r_o_control", s.r_o_control);
  s.r_o_treated = c.get_double("sim.r_o_treated", s.r_o_treated);
  s.r_a = c.get_double("sim.r_a", s.r_a);
  s.beta_deg = c.get_double("sim.beta_deg", s.beta_deg);
  s.box = c.get_double("sim.box", s.box);
  s.dt = c.get_double("sim.dt", s.dt);
  s.boundary_lookahead = c.get_double("sim.boundary_lookahead", s.boundary_lookahead);
  s.init_spread = c.get_double("sim.init_spread", s.init_spread);
  s.T = static_cast<int>(c.get_int("sim.T", s.T));
  s.T_b = static_cast<int>(c.get_int("sim.T_b", s.T_b));
  s.ti_first = static_cast<int>(c.get_int("sim.ti_first", s.ti_first));
  s.ti_last = static_cast<int>(c.get_int("sim.ti_last", s.ti_last));
  s.never_treated_fraction = c.get_double("sim.never_treated_fraction", s.never_treated_fraction);
  s.validate();
  return s;
}

void sim_to_config(const SimConfig& s, KeyValueConfig& c) {
  auto d = [&](const char* k, double v) { c.set(std::string("sim.") + k, io::format_double(v)); };
  auto i = [&](const char* k, int v) { c.set(std::string("sim.") + k, std::to_string(v)); };
  i("K", s.K);
  d("speed", s.speed);
  d("r_r", s.r_r);
  d("r_o_control", s.r_o_control);
  d("r_o_treated", s.r_o_treated);
  d("r_a", s.r_a);
  d("beta_deg", s.beta_deg);
  d("box", s.box);
  d("dt", s.dt);
  d("boundary_lookahead", s.boundary_lookahead);
  d("init_spread", s.init_spread);
  i("T", s.T);
  i("T_b", s.T_b);
  i("ti_first", s.ti_first);
  i("ti_last", s.ti_last);
  d("never_treated_fraction", s.never_treated_fraction);
}

void write_episodes(const fs::path& dir, const std::string& split,
                    const std::vector<TrajectorySample>& eps, const SimConfig& sim,
                    std::uint64_t seed, bool f64, const std::string& extra_header) {
  fs::create_directories(dir);
  const int N = static_cast<int>(eps.size());
  const int T = sim.T;
  const int K = sim.K;
  std::vector<double> xl, xg, y;
  std::vector<std::uint8_t> a;
  std::vector<std::int32_t> iv;
  xl.reserve(static_cast<std::size_t>(N) * T * K * kLocalFeatures);
  for (const auto& e : eps) {
    if (e.T != T || e.K != K) throw ContractError("episode shape does not match sim config");
    xl.insert(xl.end(), e.x_local.begin(), e.x_local.end());
    xg.insert(xg.end(), e.x_global.begin(), e.x_global.end());
    y.insert(y.end(), e.outcome.begin(), e.outcome.end());
    a.insert(a.end(), e.treatment.begin(), e.treatment.end());
    iv.push_back(e.intervention);
  }
  const std::string real = f64 ? "f64" : "f32";
  auto write_real = [&](const std::string& name, const std::vector<double>& v) {
    const fs::path p = dir / (name + "." + real);
    if (f64) {
      io::write_f64(p, v);
    } else {
      io::write_f32(p, v);
    }
  };
  write_real("x_local", xl);
  write_real("x_global", xg);
  write_real("outcome", y);
  io::write_u8(dir / "treatment.u8", a);
  io::write_i32(dir / "intervention.i32", iv);

  std::ostringstream m;
  m << "format tgvcrn-episodes 1\n"
    << "split " << split << "\n"
    << "count " << N << "\n"
    << "T " << T << "\n"
    << "K " << K << "\n"
    << "seed " << seed << "\n"
    << "field x_local " << real << " count,T,K,5 x_local." << real << "\n"
    << "field x_global " << real << " count,T x_global." << real << "\n"
    << "field outcome " << real << " count,T outcome." << real << "\n"
    << "field treatment u8 count,T treatment.u8\n"
    << "field intervention i32 count intervention.i32\n"
    << extra_header;
  KeyValueConfig echo;
  sim_to_config(sim, echo);
  m << "echo\n" << echo.to_text();
  io::write_text(dir / "manifest.txt", m.str());
}

std::vector<TrajectorySample> read_episodes(const fs::path& dir, SimConfig* sim,
                                            std::uint64_t* seed) {
  const std::string text = io::read_text(dir / "manifest.txt");
  const auto echo_at = text.find("\necho\n");
  if (echo_at == std::string::npos) {
    throw ContractError(dir.string() + ": manifest has no config echo");
  }
  std::istringstream head(text.substr(0, echo_at));
  std::map<std::string, std::string> header;
  std::map<std::string, std::string> field_dtype;
  std::string line;
  while (std::getline(head, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "field") {
      std::string name, dtype;
      ls >> name >> dtype;
      field_dtype[name] = dtype;
    } else {
      std::string rest;
      std::getline(ls, rest);
      header[key] = rest.empty() ? "" : rest.substr(1);
    }
  }
  const SimConfig s = sim_from_config(KeyValueConfig::parse(text.substr(echo_at + 6)));
  const int N = std::stoi(header.at("count"));
  const int T = std::stoi(header.at("T"));
  const int K = std::stoi(header.at("K"));
  if (T != s.T || K != s.K) throw ContractError(dir.string() + ": header disagrees with echo");
  const std::size_t nT = static_cast<std::size_t>(N) * T;
  auto read_real = [&](const std::string& name, std::size_t count) {
    const std::string dtype = field_dtype.at(name);
    const fs::path p = dir / (name + "." + dtype);
    return dtype == "f64" ? io::read_f64(p, count) : io::read_f32(p, count);
  };
  const auto xl = read_real("x_local", nT * K * kLocalFeatures);
  const auto xg = read_real("x_global", nT);
  const auto y = read_real("outcome", nT);
  const auto a = io::read_u8(dir / "treatment.u8", nT);
  const auto iv = io::read_i32(dir / "intervention.i32", N);
  std::vector<TrajectorySample> eps(N);
  const std::size_t per = static_cast<std::size_t>(T) * K * kLocalFeatures;
  for (int i = 0; i < N; ++i) {
    auto& e = eps[i];
    e.T = T;
    e.K = K;
    e.x_local.assign(xl.begin() + i * per, xl.begin() + (i + 1) * per);
    e.x_global.assign(xg.begin() + static_cast<std::size_t>(i) * T,
                      xg.begin() + static_cast<std::size_t>(i + 1) * T);
    e.outcome.assign(y.begin() + static_cast<std::size_t>(i) * T,
                     y.begin() + static_cast<std::size_t>(i + 1) * T);
    e.treatment.assign(a.begin() + static_cast<std::size_t>(i) * T,
                       a.begin() + static_cast<std::size_t>(i + 1) * T);
    e.intervention = iv[i];
  }
  if (sim) *sim = s;
  if (seed) *seed = std::stoull(header.at("seed"));
  return eps;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  write_episodes(dir / "train", "train", ds.train, ds.sim, ds.seed, false);
  write_episodes(dir / "val", "val", ds.val, ds.sim, ds.seed, false);
  write_episodes(dir / "test", "test", ds.test, ds.sim, ds.seed, false);
  std::ostringstream extra;
  extra << "episodes " << ds.test_cf.n_episodes << "\n" << "timings";
  for (int t : ds.test_cf.timings) extra << " " << t;
  extra << " none\n";
  write_episodes(dir / "test_cf", "test_cf", ds.test_cf.rollouts, ds.sim, ds.seed, false,
                 extra.str());
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  if (!fs::exists(dir / "train" / "manifest.txt")) {
    throw ContractError("no dataset found at " + dir.string());
  }
  ds.train = read_episodes(dir / "train", &ds.sim, &ds.seed);
  SimConfig other;
  std::uint64_t other_seed = 0;
  auto check = [&](const char* split) {
    if (!(other == ds.sim) || other_seed != ds.seed) {
      throw ContractError(std::string("dataset split '") + split +
                          "' was generated with a different config");
    }
  };
  ds.val = read_episodes(dir / "val", &other, &other_seed);
  check("val");
  ds.test = read_episodes(dir / "test", &other, &other_seed);
  check("test");
  ds.test_cf.rollouts = read_episodes(dir / "test_cf", &other, &other_seed);
  check("test_cf");
  ds.test_cf.n_episodes = static_cast<int>(ds.test.size());
  for (int t = ds.sim.ti_first; t <= ds.sim.ti_last; ++t) ds.test_cf.timings.push_back(t);
  ds.test_cf.validate();
  return ds;
}

}  // namespace tgvcrn::boid
