#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tgvcrn/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual prediction for multi-agent flocking simulations"};
  app.require_subcommand(1);
  tgvcrn::cli::CommandArgs args;
  std::string out, checkpoint, grid, corrupt;

  const char* names[] = {"gen", "train", "eval", "cf-rollout", "gradcheck", "sweep"};
  const char* help[] = {"generate the train/val/test splits and counterfactual test set",
                        "train a model and keep the checkpoint with the lowest validation loss",
                        "evaluate a checkpoint on the counterfactual test set",
                        "dump predicted counterfactual rollouts and effects",
                        "finite-difference check of every gradient rule",
                        "train and evaluate over a grid of loss weights"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", args.config, "experiment config file")->required();
    sub->add_option("--out", out, "output directory (overrides paths.out)");
    sub->add_option("--checkpoint", checkpoint, "checkpoint directory");
    if (std::string(names[i]) == "sweep") sub->add_option("--grid", grid, "grid file");
    if (std::string(names[i]) == "gradcheck") {
      sub->add_option("--corrupt", corrupt, "scale the backward rule of one operation");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (!out.empty()) args.out = out;
  if (!checkpoint.empty()) args.checkpoint = checkpoint;
  if (!grid.empty()) args.grid = grid;
  if (!corrupt.empty()) args.corrupt = corrupt;
  const std::string name = app.get_subcommands().front()->get_name();
  return tgvcrn::cli::run_command(name, args, std::cout, std::cerr);
}
