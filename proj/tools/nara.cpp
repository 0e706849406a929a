#include <CLI11.hpp>

#include <iostream>

#include "nara/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Confidence-gated approximate autoregressive generation"};
  app.require_subcommand(1);

  nara::TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the AR model, prior and confidence predictors");
  train_cmd->add_option("--config", train.config, "run configuration (key = value)")->required();
  train_cmd->add_option("--out", train.out, "checkpoint path")->required();
  train_cmd->add_option("--log", train.log, "epoch log CSV (default <out>.log.csv)");
  train_cmd->add_option("--seed", train.seed, "override the configured seed");

  nara::GenerateArgs generate;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a continuation of a context");
  gen_cmd->add_option("--ckpt", generate.checkpoint, "checkpoint path")->required();
  gen_cmd->add_option("--context-file", generate.context_file, "context values, one per line")->required();
  gen_cmd->add_option("--epsilon", generate.epsilon, "acceptance threshold in [0, 1]");
  gen_cmd->add_option("--horizon", generate.horizon, "number of values to generate");
  gen_cmd->add_option("--seed", generate.seed, "sampling seed");

  nara::SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep epsilon over the validation contexts");
  sweep_cmd->add_option("--ckpt", sweep.checkpoint, "checkpoint path")->required();
  sweep_cmd->add_option("--grid", sweep.grid, "start:stop:step or comma list")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "CSV output path")->required();
  sweep_cmd->add_option("--plot", sweep.plot, "SVG plot path");
  sweep_cmd->add_option("--horizon", sweep.horizon, "generation horizon");
  sweep_cmd->add_option("--seed", sweep.seed, "sampling seed");
  sweep_cmd->add_flag("--serial", sweep.serial, "use the serial reference loop");

  nara::CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Run the gradient or theory verification suite");
  check_cmd->add_option("--what", check.what, "grad or theory")->required()->check(CLI::IsMember({"grad", "theory"}));
  check_cmd->add_option("--seed", check.seed, "suite seed");
  check_cmd->add_option("--inject-fault", check.inject_fault, "corrupt the analytic gradient of one op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nara::kExitUsage;
  }

  if (*train_cmd) return nara::cmd_train(train, std::cout, std::cerr);
  if (*gen_cmd) return nara::cmd_generate(generate, std::cout, std::cerr);
  if (*sweep_cmd) return nara::cmd_sweep(sweep, std::cout, std::cerr);
  return nara::cmd_check(check, std::cout, std::cerr);
}
