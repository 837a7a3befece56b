#include "tgvcrn/cli/experiment.hpp"

#include <json.hpp>

#include "tgvcrn/boid/dataset.hpp"
#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"
#include "tgvcrn/common/rng.hpp"

namespace tgvcrn::cli {

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  ExperimentConfig c;
  const std::int64_t seed = kv.get_int("experiment.seed", 1);
  if (seed < 0) throw ConfigError("experiment.seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.n_train = static_cast<int>(kv.get_int("data.n_train", c.n_train));
  c.n_val = static_cast<int>(kv.get_int("data.n_val", c.n_val));
  c.n_test = static_cast<int>(kv.get_int("data.n_test", c.n_test));
  if (c.n_train < 1 || c.n_val < 1 || c.n_test < 1) {
    throw ConfigError("data split sizes must be positive");
  }
  c.dataset_dir = kv.get_string("paths.dataset", c.dataset_dir.string());
  c.out_dir = kv.get_string("paths.out", c.out_dir.string());
  c.eval.chunk = static_cast<int>(kv.get_int("eval.chunk", c.eval.chunk));
  if (c.eval.chunk < 1) throw ConfigError("eval.chunk must be positive");
  c.sim = boid::sim_from_config(kv);
  c.model = model::model_from_config(kv);
  c.train = train::train_from_config(kv);
  kv.reject_unused();
  c.train.seed = derive_seed(c.seed, "train", 0);
  c.eval.seed = derive_seed(c.seed, "eval", 0);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config file not found: " + path.string());
  }
  return parse(io::read_text(path));
}

std::string ExperimentConfig::to_text() const {
  KeyValueConfig kv;
  kv.set("experiment.seed", std::to_string(seed));
  kv.set("data.n_train", std::to_string(n_train));
  kv.set("data.n_val", std::to_string(n_val));
  kv.set("data.n_test", std::to_string(n_test));
  kv.set("paths.dataset", dataset_dir.string());
  kv.set("paths.out", out_dir.string());
  kv.set("eval.chunk", std::to_string(eval.chunk));
  boid::sim_to_config(sim, kv);
  model::model_to_config(model, kv);
  train::train_to_config(train, kv);
  return kv.to_text();
}

std::uint64_t ExperimentConfig::data_seed() const { return derive_seed(seed, "data", 0); }
std::uint64_t ExperimentConfig::init_seed() const { return derive_seed(seed, "init", 0); }

std::map<std::string, std::filesystem::path> files_below(const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.rfind("run_manifest_", 0) == 0) continue;
    out[std::filesystem::relative(e.path(), dir).generic_string()] = e.path();
  }
  return out;
}

void write_run_manifest(const std::filesystem::path& dir, const std::string& command,
                        const ExperimentConfig& cfg, double wall_seconds,
                        const std::map<std::string, std::filesystem::path>& files) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["seed"] = cfg.seed;
  j["wall_clock_seconds"] = wall_seconds;
  j["config"] = cfg.to_text();
  nlohmann::ordered_json sums = nlohmann::ordered_json::object();
  for (const auto& [name, path] : files) sums[name] = io::sha256_file(path);
  j["sha256"] = std::move(sums);
  std::filesystem::create_directories(dir);
  io::write_text(dir / ("run_manifest_" + command + ".json"), j.dump(2) + "\n");
}

}  // namespace tgvcrn::cli
