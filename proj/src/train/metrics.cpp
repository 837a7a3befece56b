#include "tgvcrn/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::train {
namespace {

constexpr int F = boid::kLocalFeatures;

Metric summarize(const std::vector<double>& v) {
  Metric m;
  const double n = static_cast<double>(v.size());
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

int first_argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_shapes(const boid::CounterfactualSet& cf, const CfPredictions& p) {
  if (cf.rollouts.empty()) throw ContractError("counterfactual set is empty");
  cf.validate();
  const auto& r0 = cf.rollouts.front();
  if (p.n_episodes != cf.n_episodes || p.arms != cf.arms() || p.T != r0.T || p.K != r0.K) {
    throw DimensionError("predictions do not match the counterfactual set");
  }
  const std::size_t entries = static_cast<std::size_t>(p.n_episodes) * p.arms;
  if (p.y_hat.size() != entries || p.x_hat.size() != entries) {
    throw DimensionError("prediction arrays are incomplete");
  }
  for (std::size_t e = 0; e < entries; ++e) {
    if (p.y_hat[e].size() != static_cast<std::size_t>(p.T) ||
        p.x_hat[e].size() != static_cast<std::size_t>(p.T - 1) * p.K * F) {
      throw DimensionError("prediction entry has the wrong length");
    }
  }
}

}  // namespace

CfPredictions truth_as_predictions(const boid::CounterfactualSet& cf) {
  CfPredictions p;
  p.n_episodes = cf.n_episodes;
  p.arms = cf.arms();
  p.T = cf.rollouts.front().T;
  p.K = cf.rollouts.front().K;
  for (const auto& r : cf.rollouts) {
    p.y_hat.push_back(r.outcome);
    p.x_hat.emplace_back(r.x_local.begin() + static_cast<std::ptrdiff_t>(p.K) * F,
                         r.x_local.end());
  }
  return p;
}

std::vector<double> predicted_ite(const CfPredictions& p) {
  const int timings = p.arms - 1;
  std::vector<double> tau(static_cast<std::size_t>(p.n_episodes) * timings);
  for (int i = 0; i < p.n_episodes; ++i) {
    const double none = p.y(i, timings).back();
    for (int j = 0; j < timings; ++j) tau[i * timings + j] = p.y(i, j).back() - none;
  }
  return tau;
}

double pehe_sqrt(std::span<const double> tau_hat, std::span<const double> tau) {
  if (tau_hat.size() != tau.size() || tau.empty()) throw DimensionError("pehe_sqrt: length mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) sq += (tau_hat[i] - tau[i]) * (tau_hat[i] - tau[i]);
  return std::sqrt(sq / tau.size());
}

double ate_abs_err(std::span<const double> tau_hat, std::span<const double> tau) {
  if (tau_hat.size() != tau.size() || tau.empty()) throw DimensionError("ate_abs_err: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) d += tau_hat[i] - tau[i];
  return std::abs(d / tau.size());
}

MetricsReport compute_metrics(const boid::CounterfactualSet& truth, const CfPredictions& pred,
                              int T_b) {
  check_shapes(truth, pred);
  const int n = pred.n_episodes, arms = pred.arms, timings = arms - 1;
  const int T = pred.T, K = pred.K;
  if (T_b < 1 || T_b >= T) throw ContractError("burn-in length out of range");
  const boid::IteTable ite = boid::ground_truth_ite(truth);
  const std::vector<double> tau_hat = predicted_ite(pred);

  MetricsReport rep;
  rep.n_episodes = n;
  rep.episodes.resize(n);
  std::vector<std::vector<double>> hat_by_timing(timings), true_by_timing(timings);
  for (int i = 0; i < n; ++i) {
    EpisodeMetrics& em = rep.episodes[i];
    double outcome = 0.0, cov = 0.0, uplift = -1e300;
    for (int j = 0; j < arms; ++j) {
      const auto& tr = truth.arm(i, j);
      const auto& yh = pred.y(i, j);
      const auto& xh = pred.x(i, j);
      for (int t = T_b; t < T; ++t) {
        outcome += std::abs(yh[t] - tr.outcome[t]);
        if (j < timings) uplift = std::max(uplift, yh[t]);
      }
      for (int t = T_b; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
          double sq = 0.0;
          for (int f = 0; f < F; ++f) {
            const double d = xh[((t - 1) * K + k) * F + f] - tr.local(t, k, f);
            sq += d * d;
          }
          cov += std::sqrt(sq);
        }
      }
    }
    em.l_outcome = outcome / (arms * (T - T_b));
    em.l_covariates = cov / (static_cast<double>(arms) * (T - T_b) * K);
    em.cf_uplift = uplift - truth.never(i).outcome[T_b - 1];

    std::vector<double> final_hat(timings), final_true(timings);
    for (int j = 0; j < timings; ++j) {
      final_hat[j] = pred.y(i, j).back();
      final_true[j] = truth.arm(i, j).outcome.back();
      const double d = tau_hat[i * timings + j] - ite.at(i, j);
      em.sq_ite_err += d * d / timings;
      em.ite_err += d / timings;
      hat_by_timing[j].push_back(tau_hat[i * timings + j]);
      true_by_timing[j].push_back(ite.at(i, j));
    }
    em.timing_err = std::abs(first_argmax(final_hat) - first_argmax(final_true));
  }

  auto collect = [&](auto field) {
    std::vector<double> v;
    for (const auto& e : rep.episodes) v.push_back(field(e));
    return summarize(v);
  };
  rep.l_outcome = collect([](const EpisodeMetrics& e) { return e.l_outcome; });
  rep.l_covariates = collect([](const EpisodeMetrics& e) { return e.l_covariates; });
  rep.timing_err = collect([](const EpisodeMetrics& e) { return e.timing_err; });
  rep.cf_uplift = collect([](const EpisodeMetrics& e) { return e.cf_uplift; });
  rep.pehe_sqrt = collect([](const EpisodeMetrics& e) { return std::sqrt(e.sq_ite_err); });
  rep.ate_abs_err = collect([](const EpisodeMetrics& e) { return e.ite_err; });
  rep.pehe_sqrt.mean = 0.0;
  rep.ate_abs_err.mean = 0.0;
  for (int j = 0; j < timings; ++j) {
    rep.pehe_sqrt.mean += pehe_sqrt(hat_by_timing[j], true_by_timing[j]) / timings;
    rep.ate_abs_err.mean += ate_abs_err(hat_by_timing[j], true_by_timing[j]) / timings;
  }
  return rep;
}

namespace {

const std::vector<std::pair<std::string, Metric MetricsReport::*>>& metric_fields() {
  static const std::vector<std::pair<std::string, Metric MetricsReport::*>> f{
      {"l_outcome", &MetricsReport::l_outcome},     {"l_covariates", &MetricsReport::l_covariates},
      {"pehe_sqrt", &MetricsReport::pehe_sqrt},     {"ate_abs_err", &MetricsReport::ate_abs_err},
      {"timing_err", &MetricsReport::timing_err},   {"cf_uplift", &MetricsReport::cf_uplift}};
  return f;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const MetricsReport& r,
                       const std::string& variant) {
  nlohmann::ordered_json j;
  j["variant"] = variant;
  j["n_episodes"] = r.n_episodes;
  for (const auto& [name, field] : metric_fields()) {
    j[name] = {{"mean", (r.*field).mean}, {"se", (r.*field).se}};
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    const auto& e = r.episodes[i];
    rows.push_back({{"episode", i},
                    {"l_outcome", e.l_outcome},
                    {"l_covariates", e.l_covariates},
                    {"sq_ite_err", e.sq_ite_err},
                    {"ite_err", e.ite_err},
                    {"timing_err", e.timing_err},
                    {"cf_uplift", e.cf_uplift}});
  }
  j["episodes"] = std::move(rows);
  io::write_text(path, j.dump(2) + "\n");
}

void write_report_csv(const std::filesystem::path& path, const MetricsReport& r,
                      const std::string& variant) {
  std::ostringstream o;
  o << "variant,metric,mean,se\n";
  for (const auto& [name, field] : metric_fields()) {
    o << variant << ',' << name << ',' << io::format_double((r.*field).mean) << ','
      << io::format_double((r.*field).se) << '\n';
  }
  io::write_text(path, o.str());
}

void write_episode_csv(const std::filesystem::path& path, const MetricsReport& r) {
  std::ostringstream o;
  o << "episode,l_outcome,l_covariates,sq_ite_err,ite_err,timing_err,cf_uplift\n";
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    const auto& e = r.episodes[i];
    o << i << ',' << io::format_double(e.l_outcome) << ',' << io::format_double(e.l_covariates)
      << ',' << io::format_double(e.sq_ite_err) << ',' << io::format_double(e.ite_err) << ','
      << io::format_double(e.timing_err) << ',' << io::format_double(e.cf_uplift) << '\n';
  }
  io::write_text(path, o.str());
}

void write_predictions(const std::filesystem::path& dir, const CfPredictions& p) {
  std::filesystem::create_directories(dir);
  std::vector<double> y, x;
  for (const auto& v : p.y_hat) y.insert(y.end(), v.begin(), v.end());
  for (const auto& v : p.x_hat) x.insert(x.end(), v.begin(), v.end());
  std::ostringstream shape;
  shape << "episodes " << p.n_episodes << "\narms " << p.arms << "\nT " << p.T << "\nK " << p.K
        << "\nfeatures " << F << "\n";
  io::write_text(dir / "shape.txt", shape.str());
  io::write_f64(dir / "y_hat.f64", y);
  io::write_f64(dir / "x_hat.f64", x);
}

CfPredictions read_predictions(const std::filesystem::path& dir) {
  std::istringstream in(io::read_text(dir / "shape.txt"));
  CfPredictions p;
  std::string w;
  int features = 0;
  in >> w >> p.n_episodes >> w >> p.arms >> w >> p.T >> w >> p.K >> w >> features;
  if (!in || features != F || p.n_episodes < 1 || p.arms < 2 || p.T < 2 || p.K < 1) {
    throw ContractError("malformed prediction shape file in " + dir.string());
  }
  const std::size_t entries = static_cast<std::size_t>(p.n_episodes) * p.arms;
  const std::size_t xlen = static_cast<std::size_t>(p.T - 1) * p.K * F;
  const auto y = io::read_f64(dir / "y_hat.f64", entries * p.T);
  const auto x = io::read_f64(dir / "x_hat.f64", entries * xlen);
  for (std::size_t e = 0; e < entries; ++e) {
    p.y_hat.emplace_back(y.begin() + e * p.T, y.begin() + (e + 1) * p.T);
    p.x_hat.emplace_back(x.begin() + e * xlen, x.begin() + (e + 1) * xlen);
  }
  return p;
}

}  // namespace tgvcrn::train
