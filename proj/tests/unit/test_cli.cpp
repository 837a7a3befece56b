#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tgvcrn/boid/dataset.hpp"
#include "tgvcrn/cli/commands.hpp"
#include "tgvcrn/cli/experiment.hpp"
#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"

using namespace tgvcrn;
using namespace tgvcrn::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "tgvcrn_cli_test";

std::string tiny_config(const fs::path& data, const fs::path& out, const std::string& extra = "") {
  std::ostringstream o;
  o << "[experiment]\nseed = 3\n"
    << "[data]\nn_train = 8\nn_val = 4\nn_test = 3\n"
    << "[paths]\ndataset = " << data.string() << "\nout = " << out.string() << "\n"
    << "[sim]\nK = 4\nT = 7\nT_b = 4\nti_first = 4\nti_last = 6\n"
    << "[model]\nvariant = TGV_CRN\nhidden = 6\nlatent = 3\nmlp_hidden = 8\nedge_hidden = 6\n"
    << "message = 5\nrnn_hidden = 8\n"
    << "[train]\nepochs = 2\nbatch_size = 4\nchunk = 2\nlr = 0.01\n"
    << extra;
  return o.str();
}

std::string edited(std::string text, const std::string& from, const std::string& to) {
  text.replace(text.find(from), from.size(), to);
  return text;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / name;
  io::write_text(p, text);
  return p;
}

int run(const std::string& cmd, const fs::path& config, CommandArgs extra = {}) {
  extra.config = config;
  std::ostringstream log, err;
  const int code = run_command(cmd, extra, log, err);
  if (code != 0) MESSAGE(cmd << ": " << err.str());
  return code;
}

CommandArgs out_at(const fs::path& p) {
  CommandArgs a;
  a.out = p;
  return a;
}

CommandArgs checkpoint_at(const fs::path& p) {
  CommandArgs a;
  a.checkpoint = p;
  return a;
}

std::map<std::string, std::string> checksums(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& [name, path] : files_below(dir)) out[name] = io::sha256_file(path);
  return out;
}

int exit_status(const std::string& command) {
  const int raw = std::system(command.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("experiment config parsing") {
  const auto c = ExperimentConfig::parse(tiny_config("d", "o"));
  CHECK(c.seed == 3);
  CHECK(c.n_train == 8);
  CHECK(c.sim.K == 4);
  CHECK(c.train.lr == 0.01);
  CHECK(c.dataset_dir == fs::path("d"));
  CHECK(ExperimentConfig::parse(c.to_text()).to_text() == c.to_text());
  CHECK(c.data_seed() != c.init_seed());
  CHECK_THROWS_AS(ExperimentConfig::parse(tiny_config("d", "o", "[train]\nmomentum = 0.9\n")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[sim]\nK = 0\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[data]\nn_train = 0\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(kRoot / "missing.cfg"), ConfigError);
}

TEST_CASE("pipeline outputs are reproducible") {
  fs::remove_all(kRoot);
  const fs::path data = kRoot / "data";
  const fs::path cfg1 = write_config("a.cfg", tiny_config(data, kRoot / "run_a"));
  const fs::path cfg2 = write_config("b.cfg", tiny_config(data, kRoot / "run_b"));

  REQUIRE(run("gen", cfg1) == 0);
  const auto data_sums = checksums(data);
  CHECK(data_sums.size() >= 20);
  REQUIRE(run("gen", cfg1, out_at(kRoot / "data_again")) == 0);
  CHECK(checksums(kRoot / "data_again") == data_sums);

  for (const fs::path& cfg : {cfg1, cfg2}) {
    REQUIRE(run("train", cfg) == 0);
    REQUIRE(run("eval", cfg) == 0);
    REQUIRE(run("cf-rollout", cfg) == 0);
  }
  const auto a = checksums(kRoot / "run_a");
  const auto b = checksums(kRoot / "run_b");
  CHECK(a.size() >= 12);
  CHECK(a == b);
  CHECK(a.count("checkpoint/params.f64") == 1);
  CHECK(a.count("eval/report.json") == 1);
  CHECK(a.count("cf_rollout/ite.csv") == 1);

  SUBCASE("run manifests") {
    std::ifstream in(kRoot / "run_a" / "eval" / "run_manifest_eval.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["command"] == "eval");
    CHECK(j["version"] == kVersion);
    CHECK(j["seed"] == 3);
    CHECK(j["wall_clock_seconds"].get<double>() >= 0.0);
    CHECK(j["config"].get<std::string>().find("variant = TGV_CRN") != std::string::npos);
    CHECK(j["sha256"]["report.json"] == a.at("eval/report.json"));
    CHECK(fs::exists(kRoot / "run_a" / "run_manifest_train.json"));
    CHECK(fs::exists(data / "run_manifest_gen.json"));
  }

  SUBCASE("one predicted rollout per arm") {
    boid::SimConfig sim;
    std::uint64_t seed = 0;
    const auto eps = boid::read_episodes(kRoot / "run_a" / "cf_rollout", &sim, &seed);
    CHECK(eps.size() == 3 * 4);
    std::ifstream ite(kRoot / "run_a" / "cf_rollout" / "ite.csv");
    int lines = 0;
    for (std::string l; std::getline(ite, l);) ++lines;
    CHECK(lines == 1 + 3 * 3);
  }

  SUBCASE("evaluation needs the dataset it was configured with") {
    const fs::path reseeded = write_config("c.cfg", edited(tiny_config(data, kRoot / "run_c"), "seed = 3", "seed = 4"));
    CHECK(run("eval", reseeded, checkpoint_at(kRoot / "run_a" / "checkpoint")) == 1);
    const fs::path resized =
        write_config("d.cfg", edited(tiny_config(data, kRoot / "run_d"), "n_test = 3", "n_test = 4"));
    CHECK(run("train", resized) == 1);
  }

  SUBCASE("a checkpoint of another variant is refused") {
    const fs::path cfg = write_config("e.cfg", edited(tiny_config(data, kRoot / "run_e"), "TGV_CRN", "TG_CRN"));
    CHECK(run("eval", cfg, checkpoint_at(kRoot / "run_a" / "checkpoint")) == 1);
  }
}

TEST_CASE("zero epochs write the initialization as the checkpoint") {
  const fs::path data = kRoot / "data0";
  const fs::path cfg = write_config("zero.cfg", edited(tiny_config(data, kRoot / "run_zero"), "epochs = 2", "epochs = 0"));
  REQUIRE(run("gen", cfg) == 0);
  REQUIRE(run("train", cfg) == 0);
  const auto c = ExperimentConfig::load(cfg);
  model::Model init(c.model, c.sim, c.init_seed());
  model::Model loaded(c.model, c.sim, 99);
  loaded.load(kRoot / "run_zero" / "checkpoint" / "params.txt",
              kRoot / "run_zero" / "checkpoint" / "params.f64");
  CHECK(loaded.params() == init.params());
  std::ifstream in(kRoot / "run_zero" / "train_summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["best_epoch"] == 0);
}

TEST_CASE("non-finite data stops training with the numeric exit code") {
  const fs::path data = kRoot / "data_nan";
  const fs::path cfg = write_config("nan.cfg", tiny_config(data, kRoot / "run_nan"));
  REQUIRE(run("gen", cfg) == 0);
  const fs::path blob = data / "train" / "x_local.f32";
  std::vector<float> v(fs::file_size(blob) / 4);
  {
    std::ifstream in(blob, std::ios::binary);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
  }
  v[7] = std::nanf("");
  {
    std::ofstream out(blob, std::ios::binary);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
  }
  CHECK(run("train", cfg) == 2);
}

TEST_CASE("missing inputs are contract errors") {
  const fs::path cfg = write_config("nodata.cfg", tiny_config(kRoot / "absent", kRoot / "run_absent"));
  CHECK(run("train", cfg) == 1);
  CHECK(run("eval", cfg) == 1);
  CHECK(run("gen", kRoot / "no_such.cfg") == 1);
}

TEST_CASE("the executable maps failures to exit codes") {
  const std::string exe = TGVCRN_CLI_PATH;
  const fs::path cfg = write_config("exe.cfg", tiny_config(kRoot / "exe_data", kRoot / "exe_run"));
  CHECK(exit_status(exe + " gen --config " + cfg.string() + " > /dev/null 2>&1") == 0);
  CHECK(exit_status(exe + " bogus --config " + cfg.string() + " > /dev/null 2>&1") == 1);
  CHECK(exit_status(exe + " train > /dev/null 2>&1") == 1);
  CHECK(exit_status(exe + " eval --config " + (kRoot / "missing.cfg").string() + " > /dev/null 2>&1") == 1);
  CHECK(exit_status(exe + " gradcheck --config " + cfg.string() + " --corrupt nosuchop > /dev/null 2>&1") == 1);
}
