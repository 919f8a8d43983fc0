#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "patrol/docs.hpp"
#include "patrol/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"energy-aware multi-agent patrolling: training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint;
  std::string out_dir;
  std::optional<uint64_t> seed;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "experiment config file");
    if (needs_config) opt->required();
    cmd->add_option("--seed", seed, "override the master seed");
    cmd->add_option("--out", out_dir, "override the output directory");
  };

  auto* train = app.add_subcommand("train", "train a policy and write checkpoints");
  add_common(train, true);

  auto* battery = app.add_subcommand("eval-battery", "battery recharging table");
  add_common(battery, true);
  battery->add_option("--checkpoint", checkpoint, "policy checkpoint to evaluate");

  auto* patrol = app.add_subcommand("eval-patrol", "idleness statistics per agent count");
  add_common(patrol, true);
  patrol->add_option("--checkpoint", checkpoint, "policy checkpoint to evaluate");

  auto* fault = app.add_subcommand("eval-fault", "long-run failure/addition series");
  add_common(fault, true);
  fault->add_option("--checkpoint", checkpoint, "policy checkpoint to evaluate");

  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference audit of the gradient core");
  add_common(gradcheck, false);

  std::string manifest_dir = "out";
  std::string index_path = "docs/repro_index.md";
  auto* repro = app.add_subcommand("repro-index", "regenerate the reproduction index");
  repro->add_option("--manifests", manifest_dir, "directory holding run manifests");
  repro->add_option("--out", index_path, "index file to write");

  CLI11_PARSE(app, argc, argv);

  if (repro->parsed()) return patrol::docs::cmd_repro_index(manifest_dir, index_path);

  std::string command = app.get_subcommands().front()->get_name();
  return patrol::harness::run_command(command, config_path, checkpoint, seed, out_dir);
}
