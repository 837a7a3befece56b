#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tgvcrn/boid/dataset.hpp"

namespace tgvcrn::train {

// Predicted counterfactual trajectories, laid out like CounterfactualSet:
// episode-major, one entry per arm (timings ascending, then never treated).
struct CfPredictions {
  int n_episodes = 0;
  int arms = 0;
  int T = 0;
  int K = 0;
  std::vector<std::vector<double>> y_hat;  // T values: y_{t+1}, t = 0..T-1
  std::vector<std::vector<double>> x_hat;  // (T-1)*K*5: x_{t+1}, t = 0..T-2

  const std::vector<double>& y(int i, int j) const { return y_hat[i * arms + j]; }
  const std::vector<double>& x(int i, int j) const { return x_hat[i * arms + j]; }
};

// The true trajectories packaged as predictions.
CfPredictions truth_as_predictions(const boid::CounterfactualSet& cf);

// tau_hat[i * timings + j] = y_hat^(t'_j)_T - y_hat^(none)_T.
std::vector<double> predicted_ite(const CfPredictions& p);

// sqrt(mean (tau_hat - tau)^2) and |mean tau_hat - mean tau| over samples.
double pehe_sqrt(std::span<const double> tau_hat, std::span<const double> tau);
double ate_abs_err(std::span<const double> tau_hat, std::span<const double> tau);

struct Metric {
  double mean = 0.0;
  double se = 0.0;  // standard error over episodes
};

struct EpisodeMetrics {
  double l_outcome = 0.0;
  double l_covariates = 0.0;
  double sq_ite_err = 0.0;   // mean over timings of (tau_hat - tau)^2
  double ite_err = 0.0;      // mean over timings of tau_hat - tau
  double timing_err = 0.0;
  double cf_uplift = 0.0;
};

struct MetricsReport {
  int n_episodes = 0;
  Metric l_outcome, l_covariates, pehe_sqrt, ate_abs_err, timing_err, cf_uplift;
  std::vector<EpisodeMetrics> episodes;
};

// Prediction steps are t = T_b..T-1 (outcomes y_{T_b+1}..y_T).
//   l_outcome     mean |y_hat - y| over arms and prediction steps
//   l_covariates  mean over arms, predicted states x_{T_b}..x_{T-1} and agents
//                 of the Euclidean norm of the raw 5-feature error
//   pehe_sqrt     mean over timings of sqrt(mean_i (tau_hat - tau)^2)
//   ate_abs_err   mean over timings of |mean_i tau_hat - mean_i tau|
//   timing_err    mean |argmax_j y_hat^(j)_T - argmax_j y^(j)_T| in steps
//                 (first index on ties)
//   cf_uplift     mean of max over timings and prediction steps of y_hat
//                 minus the last burn-in outcome y_{T_b}
// Standard errors use per-episode values: for pehe_sqrt the per-episode root
// mean squared effect error, for ate_abs_err the per-episode mean error.
MetricsReport compute_metrics(const boid::CounterfactualSet& truth, const CfPredictions& pred,
                              int T_b);

void write_report_json(const std::filesystem::path& path, const MetricsReport& r,
                       const std::string& variant);
void write_report_csv(const std::filesystem::path& path, const MetricsReport& r,
                      const std::string& variant);
void write_episode_csv(const std::filesystem::path& path, const MetricsReport& r);

// Raw prediction arrays (f64): y_hat.f64 with n*arms*T values and
// x_hat.f64 with n*arms*(T-1)*K*5 values, plus a shape file.
void write_predictions(const std::filesystem::path& dir, const CfPredictions& p);
CfPredictions read_predictions(const std::filesystem::path& dir);

}  // namespace tgvcrn::train
