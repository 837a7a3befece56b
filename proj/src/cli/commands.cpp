#include "tgvcrn/cli/commands.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "tgvcrn/boid/dataset.hpp"
#include "tgvcrn/cli/gradcheck_suite.hpp"
#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"
#include "tgvcrn/model/model.hpp"
#include "tgvcrn/train/evaluate.hpp"

namespace tgvcrn::cli {
namespace fs = std::filesystem;
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path out_dir(const ExperimentConfig& cfg, const CommandArgs& args) {
  return args.out ? *args.out : cfg.out_dir;
}

fs::path checkpoint_dir(const ExperimentConfig& cfg, const CommandArgs& args) {
  return args.checkpoint ? *args.checkpoint : out_dir(cfg, args) / "checkpoint";
}

boid::Dataset load_matching_dataset(const ExperimentConfig& cfg) {
  if (!fs::is_directory(cfg.dataset_dir)) {
    throw ContractError("dataset directory not found: " + cfg.dataset_dir.string());
  }
  boid::Dataset ds = boid::read_dataset(cfg.dataset_dir);
  if (!(ds.sim == cfg.sim)) {
    throw ConfigError("dataset " + cfg.dataset_dir.string() +
                      " was generated with a different [sim] section");
  }
  if (ds.seed != cfg.data_seed()) {
    throw ConfigError("dataset " + cfg.dataset_dir.string() + " was generated with another seed");
  }
  if (static_cast<int>(ds.train.size()) != cfg.n_train ||
      static_cast<int>(ds.val.size()) != cfg.n_val ||
      static_cast<int>(ds.test.size()) != cfg.n_test) {
    throw ConfigError("dataset split sizes differ from the [data] section");
  }
  return ds;
}

model::Model load_model(const ExperimentConfig& cfg, const fs::path& ckpt) {
  if (!fs::is_regular_file(ckpt / "params.txt")) {
    throw ContractError("checkpoint not found: " + ckpt.string());
  }
  model::Model m(cfg.model, cfg.sim, cfg.init_seed());
  m.load(ckpt / "params.txt", ckpt / "params.f64");
  return m;
}

void print_report(std::ostream& log, const train::MetricsReport& r) {
  auto line = [&](const char* name, const train::Metric& m) {
    log << "  " << std::left << std::setw(14) << name << std::fixed << std::setprecision(4)
        << m.mean << " +- " << m.se << "\n";
  };
  line("l_outcome", r.l_outcome);
  line("l_covariates", r.l_covariates);
  line("pehe_sqrt", r.pehe_sqrt);
  line("ate_abs_err", r.ate_abs_err);
  line("timing_err", r.timing_err);
  line("cf_uplift", r.cf_uplift);
  log.unsetf(std::ios::floatfield);
}

}  // namespace

void cmd_gen(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log) {
  const auto t0 = Clock::now();
  const fs::path dir = args.out ? *args.out : cfg.dataset_dir;
  const boid::Dataset ds =
      boid::generate_dataset(cfg.sim, cfg.n_train, cfg.n_val, cfg.n_test, cfg.data_seed());
  boid::write_dataset(ds, dir);
  const boid::IteTable ite = boid::ground_truth_ite(ds.test_cf);
  log << "wrote " << dir.string() << ": " << ds.train.size() << " train, " << ds.val.size()
      << " val, " << ds.test.size() << " test, " << ds.test_cf.rollouts.size()
      << " counterfactual rollouts; mean tau_T " << ite.mean() << "\n";
  write_run_manifest(dir, "gen", cfg, seconds_since(t0), files_below(dir));
}

void cmd_train(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log) {
  const auto t0 = Clock::now();
  const boid::Dataset ds = load_matching_dataset(cfg);
  const fs::path dir = out_dir(cfg, args);
  const fs::path ckpt = checkpoint_dir(cfg, args);
  fs::create_directories(dir);
  fs::create_directories(ckpt);
  model::Model m(cfg.model, cfg.sim, cfg.init_seed());
  log << "training " << model::variant_name(cfg.model.variant) << " ("
      << m.params().num_scalars() << " parameters)\n";
  const train::TrainResult r = train::fit(m, ds.train, ds.val, cfg.train, &log);
  m.save(ckpt / "params.txt", ckpt / "params.f64");
  train::write_loss_csv(dir / "loss.csv", r);
  nlohmann::ordered_json j;
  j["variant"] = model::variant_name(cfg.model.variant);
  j["epochs"] = cfg.train.epochs;
  j["initial_val_total"] = r.initial_val.total;
  j["best_epoch"] = r.best_epoch;
  j["best_val_total"] = r.best_val;
  io::write_text(dir / "train_summary.json", j.dump(2) + "\n");
  log << "best epoch " << r.best_epoch << " val " << r.best_val << " (initial "
      << r.initial_val.total << ")\n";
  std::map<std::string, fs::path> files;
  for (const char* f : {"loss.csv", "train_summary.json"}) files[f] = dir / f;
  files["checkpoint/params.txt"] = ckpt / "params.txt";
  files["checkpoint/params.f64"] = ckpt / "params.f64";
  write_run_manifest(dir, "train", cfg, seconds_since(t0), files);
}

void cmd_eval(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log) {
  const auto t0 = Clock::now();
  const boid::Dataset ds = load_matching_dataset(cfg);
  const model::Model m = load_model(cfg, checkpoint_dir(cfg, args));
  const fs::path dir = out_dir(cfg, args) / "eval";
  fs::create_directories(dir);
  const train::CfPredictions pred = train::predict_counterfactuals(m, ds.test_cf, cfg.eval);
  const train::MetricsReport rep = train::compute_metrics(ds.test_cf, pred, cfg.sim.T_b);
  const std::string variant = model::variant_name(cfg.model.variant);
  train::write_report_json(dir / "report.json", rep, variant);
  train::write_report_csv(dir / "report.csv", rep, variant);
  train::write_episode_csv(dir / "episodes.csv", rep);
  train::write_predictions(dir / "predictions", pred);
  log << variant << " on " << rep.n_episodes << " test episodes\n";
  print_report(log, rep);
  write_run_manifest(dir, "eval", cfg, seconds_since(t0), files_below(dir));
}

void cmd_cf_rollout(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log) {
  const auto t0 = Clock::now();
  const boid::Dataset ds = load_matching_dataset(cfg);
  const model::Model m = load_model(cfg, checkpoint_dir(cfg, args));
  const fs::path dir = out_dir(cfg, args) / "cf_rollout";
  fs::create_directories(dir);
  const train::CfPredictions pred = train::predict_counterfactuals(m, ds.test_cf, cfg.eval);
  const auto eps = train::predictions_as_episodes(ds.test_cf, pred, cfg.sim.T_b);
  std::ostringstream timings;
  timings << "episodes " << ds.test_cf.n_episodes << "\ntimings";
  for (int t : ds.test_cf.timings) timings << ' ' << t;
  timings << " none\n";
  boid::write_episodes(dir, "predicted", eps, cfg.sim, ds.seed, true, timings.str());

  const auto tau_hat = train::predicted_ite(pred);
  const boid::IteTable tau = boid::ground_truth_ite(ds.test_cf);
  std::ostringstream csv;
  csv << "episode,intervention,tau_hat,tau\n";
  for (int i = 0; i < tau.n_episodes; ++i) {
    for (int j = 0; j < tau.n_timings; ++j) {
      csv << i << ',' << ds.test_cf.timings[j] << ','
          << io::format_double(tau_hat[i * tau.n_timings + j]) << ','
          << io::format_double(tau.at(i, j)) << '\n';
    }
  }
  io::write_text(dir / "ite.csv", csv.str());
  log << "wrote " << eps.size() << " predicted rollouts to " << dir.string() << "\n";
  write_run_manifest(dir, "cf-rollout", cfg, seconds_since(t0), files_below(dir));
}

bool cmd_gradcheck(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log) {
  const auto t0 = Clock::now();
  std::optional<ad::Op> corrupt;
  if (args.corrupt) {
    corrupt = parse_op(*args.corrupt);
    if (!corrupt) throw ConfigError("unknown operation for --corrupt: " + *args.corrupt);
  }
  const GradcheckReport r = run_gradcheck_suite(derive_seed(cfg.seed, "gradcheck", 0), corrupt);
  print_gradcheck_table(log, r);
  const fs::path dir = out_dir(cfg, args);
  fs::create_directories(dir);
  write_gradcheck_csv((dir / "gradcheck.csv").string(), r);
  write_run_manifest(dir, "gradcheck", cfg, seconds_since(t0),
                     {{"gradcheck.csv", dir / "gradcheck.csv"}});
  log << (r.all_pass() ? "all gradient checks passed" : "gradient check FAILED") << "\n";
  return r.all_pass();
}

void cmd_sweep(const ExperimentConfig& cfg, const CommandArgs& args, std::ostream& log) {
  const auto t0 = Clock::now();
  const boid::Dataset ds = load_matching_dataset(cfg);
  const auto grid = args.grid ? train::parse_grid(io::read_text(*args.grid))
                              : train::default_grid(cfg.train.weights);
  const auto rows = train::sweep(cfg.model, ds, cfg.init_seed(), cfg.train, grid, cfg.eval, &log);
  const fs::path dir = out_dir(cfg, args);
  fs::create_directories(dir);
  train::write_sweep_csv(dir / "sweep.csv", rows);
  log << std::left << std::setw(34) << "point" << std::setw(12) << "l_outcome" << std::setw(14)
      << "l_covariates" << std::setw(11) << "pehe_sqrt" << std::setw(13) << "ate_abs_err"
      << "timing_err\n";
  for (const auto& r : rows) {
    log << std::left << std::setw(34) << r.point.label << std::fixed << std::setprecision(4)
        << std::setw(12) << r.report.l_outcome.mean << std::setw(14) << r.report.l_covariates.mean
        << std::setw(11) << r.report.pehe_sqrt.mean << std::setw(13) << r.report.ate_abs_err.mean
        << r.report.timing_err.mean << "\n";
    log.unsetf(std::ios::floatfield);
  }
  write_run_manifest(dir, "sweep", cfg, seconds_since(t0), {{"sweep.csv", dir / "sweep.csv"}});
}

int run_command(const std::string& name, const CommandArgs& args, std::ostream& log,
                std::ostream& err) {
  try {
    const ExperimentConfig cfg = ExperimentConfig::load(args.config);
    if (name == "gen") {
      cmd_gen(cfg, args, log);
    } else if (name == "train") {
      cmd_train(cfg, args, log);
    } else if (name == "eval") {
      cmd_eval(cfg, args, log);
    } else if (name == "cf-rollout") {
      cmd_cf_rollout(cfg, args, log);
    } else if (name == "gradcheck") {
      return cmd_gradcheck(cfg, args, log) ? 0 : 1;
    } else if (name == "sweep") {
      cmd_sweep(cfg, args, log);
    } else {
      throw ContractError("unknown command: " + name);
    }
    return 0;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tgvcrn::cli
