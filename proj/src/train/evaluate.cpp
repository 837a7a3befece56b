#include "tgvcrn/train/evaluate.hpp"

#include <algorithm>
#include <sstream>

#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::train {

CfPredictions predict_counterfactuals(const model::Model& m, const boid::CounterfactualSet& cf,
                                      const EvalOptions& opt) {
  if (cf.rollouts.empty()) throw ContractError("evaluation needs a counterfactual set");
  cf.validate();
  if (opt.chunk < 1) throw ContractError("evaluation chunk must be positive");
  const auto& first = cf.rollouts.front();
  const int n = cf.n_episodes, arms = cf.arms(), T = first.T, K = first.K;
  const int F = boid::kLocalFeatures;
  const bool sampled = m.config().stochastic() && m.config().ite_samples > 0;
  const int draws = sampled ? m.config().ite_samples : 1;

  CfPredictions p;
  p.n_episodes = n;
  p.arms = arms;
  p.T = T;
  p.K = K;
  p.y_hat.assign(static_cast<std::size_t>(n) * arms, std::vector<double>(T, 0.0));
  p.x_hat.assign(static_cast<std::size_t>(n) * arms,
                 std::vector<double>(static_cast<std::size_t>(T - 1) * K * F, 0.0));

  std::uint64_t block = 0;
  for (int j = 0; j < arms; ++j) {
    for (int i0 = 0; i0 < n; i0 += opt.chunk, ++block) {
      const int i1 = std::min(n, i0 + opt.chunk);
      std::vector<const boid::TrajectorySample*> eps;
      for (int i = i0; i < i1; ++i) eps.push_back(&cf.arm(i, j));
      const model::Batch batch = model::Batch::from_episodes(eps);
      for (int s = 0; s < draws; ++s) {
        Rng rng(derive_seed(opt.seed, "eval", (block << 16) + s));
        model::Tape tape(const_cast<ad::ParamStore*>(&m.params()));
        const auto r = m.rollout(tape, batch, {model::Mode::Infer, sampled}, rng);
        for (int i = i0; i < i1; ++i) {
          auto& y = p.y_hat[i * arms + j];
          auto& x = p.x_hat[i * arms + j];
          const int b = i - i0;
          for (int t = 0; t < T; ++t) y[t] += r.y_hat[t].value()(b, 0) / draws;
          for (int t = 0; t + 1 < T; ++t) {
            const auto& xv = r.x_hat[t].value();
            for (int k = 0; k < K; ++k) {
              for (int f = 0; f < F; ++f) {
                x[(t * K + k) * F + f] += xv(b * K + k, f) / draws;
              }
            }
          }
        }
      }
    }
  }
  return p;
}

MetricsReport evaluate(const model::Model& m, const boid::CounterfactualSet& cf,
                       const EvalOptions& opt) {
  return compute_metrics(cf, predict_counterfactuals(m, cf, opt), m.sim().T_b);
}

std::vector<boid::TrajectorySample> predictions_as_episodes(const boid::CounterfactualSet& cf,
                                                            const CfPredictions& p, int T_b) {
  const int F = boid::kLocalFeatures;
  std::vector<boid::TrajectorySample> out;
  for (int i = 0; i < p.n_episodes; ++i) {
    for (int j = 0; j < p.arms; ++j) {
      boid::TrajectorySample e = cf.arm(i, j);
      const auto& x = p.x(i, j);
      for (int t = T_b; t < p.T; ++t) {
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(t - 1) * p.K * F, p.K * F,
                    e.x_local.begin() + static_cast<std::ptrdiff_t>(t) * p.K * F);
      }
      for (int t = T_b; t < p.T; ++t) e.outcome[t] = p.y(i, j)[t];
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<SweepPoint> default_grid(const LossWeights& base) {
  std::vector<SweepPoint> g{{base, "default"}};
  for (double v : {0.01, 1.0}) {
    const std::string s = io::format_double(v);
    LossWeights w = base;
    w.alpha = v;
    g.push_back({w, "alpha=" + s});
    w = base;
    w.gamma = v;
    g.push_back({w, "gamma=" + s});
    w = base;
    w.lambda = v;
    g.push_back({w, "lambda=" + s});
  }
  return g;
}

std::vector<SweepPoint> parse_grid(const std::string& text) {
  std::vector<SweepPoint> g;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream in(line);
    SweepPoint p;
    if (!(in >> p.weights.alpha)) continue;
    std::string extra;
    if (!(in >> p.weights.gamma >> p.weights.lambda) || (in >> extra)) {
      throw ConfigError("grid line " + std::to_string(lineno) + ": expected alpha gamma lambda");
    }
    p.weights.validate();
    p.label = "alpha=" + io::format_double(p.weights.alpha) +
              " gamma=" + io::format_double(p.weights.gamma) +
              " lambda=" + io::format_double(p.weights.lambda);
    g.push_back(p);
  }
  if (g.empty()) throw ConfigError("sweep grid is empty");
  return g;
}

std::vector<SweepRow> sweep(const model::ModelConfig& mc, const boid::Dataset& ds,
                            std::uint64_t init_seed, const TrainConfig& tc,
                            const std::vector<SweepPoint>& grid, const EvalOptions& eo,
                            std::ostream* progress) {
  std::vector<SweepRow> rows;
  for (const auto& p : grid) {
    if (progress) *progress << "sweep point " << p.label << "\n";
    model::Model m(mc, ds.sim, init_seed);
    TrainConfig t = tc;
    t.weights = p.weights;
    SweepRow row{p, fit(m, ds.train, ds.val, t, progress), {}};
    row.report = evaluate(m, ds.test_cf, eo);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << "label,alpha,gamma,lambda,best_epoch,best_val,l_outcome,l_outcome_se,l_covariates,"
       "l_covariates_se,pehe_sqrt,ate_abs_err,timing_err,cf_uplift\n";
  for (const auto& r : rows) {
    const auto& m = r.report;
    o << '"' << r.point.label << "\"," << io::format_double(r.point.weights.alpha) << ','
      << io::format_double(r.point.weights.gamma) << ','
      << io::format_double(r.point.weights.lambda) << ',' << r.train.best_epoch << ','
      << io::format_double(r.train.best_val) << ',' << io::format_double(m.l_outcome.mean) << ','
      << io::format_double(m.l_outcome.se) << ',' << io::format_double(m.l_covariates.mean) << ','
      << io::format_double(m.l_covariates.se) << ',' << io::format_double(m.pehe_sqrt.mean) << ','
      << io::format_double(m.ate_abs_err.mean) << ',' << io::format_double(m.timing_err.mean)
      << ',' << io::format_double(m.cf_uplift.mean) << '\n';
  }
  io::write_text(path, o.str());
}

}  // namespace tgvcrn::train
