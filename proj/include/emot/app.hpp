#pragma once

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "emot/cli.hpp"

namespace emot {

/// Argument parsing and dispatch for the `emot` binary. Subcommands:
/// simulate, solve, verify, export-plots, inspect. Returns the stable exit
/// codes defined in cli.hpp.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"entropic martingale optimal transport: market pipeline and solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string inspect_target;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t z_index = static_cast<std::size_t>(-1);

  CLI::App* sim = app.add_subcommand(
      "simulate", "simulate the market model and write instance artifacts");
  sim->add_option("--config", config_path, "JSON configuration file");
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "override the configured seed");
  sim->add_option("--threads", threads, "simulation worker threads");

  CLI::App* solve = app.add_subcommand(
      "solve", "solve the instance in --out and write result artifacts");
  solve->add_option("--config", config_path, "JSON configuration file");
  solve->add_option("--out", out_dir, "instance/result directory")->required();
  solve->add_option("--seed", seed, "override the configured seed");
  solve->add_option("--threads", threads, "(accepted for interface stability)");

  CLI::App* verify = app.add_subcommand(
      "verify", "randomized cross-checks of the two independent solvers");
  verify->add_option("--config", config_path, "JSON configuration file");
  verify->add_option("--seed", seed, "override the verification suite seed");
  verify->add_option("--threads", threads, "(accepted for interface stability)");

  CLI::App* plots = app.add_subcommand(
      "export-plots", "emit plot-ready CSVs from solve artifacts");
  plots->add_option("--out", out_dir, "result directory")->required();
  plots->add_option("--z-index", z_index, "z slice for the plan heatmap (default: middle)");

  CLI::App* inspect = app.add_subcommand("inspect", "print manifest/shape info");
  inspect->add_option("target", inspect_target, "result directory or artifact file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }

  AppConfig cfg;
  try {
    if (!config_path.empty()) cfg = AppConfig::from_file(config_path);
    if (sim->count("--seed") || solve->count("--seed")) cfg.heston.seed = seed;
    if (verify->count("--seed")) cfg.verify_seed = seed;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config_error;
  }

  if (sim->parsed()) return cmd_simulate(cfg, out_dir, threads);
  if (solve->parsed()) return cmd_solve(cfg, out_dir);
  if (verify->parsed()) return cmd_verify(cfg);
  if (plots->parsed()) return cmd_export_plots(out_dir, z_index);
  if (inspect->parsed()) return cmd_inspect(inspect_target);
  return exit_config_error;
}

}  // namespace emot
