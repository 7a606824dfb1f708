#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace nhocp::cli;

  CLI::App app{"Optimal control of nonholonomic systems: simulate, optimize, sweep, check"};
  app.require_subcommand(1);

  std::optional<std::string> config_path, preset;
  CommandOptions options;
  std::optional<double> tol;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--preset", preset, "built-in configuration: paper-sleigh or paper-cvt");
  app.add_option("--out", options.out, "output directory")->capture_default_str();
  app.add_option("--jobs", options.jobs, "parallel sweep workers (disables warm starts)")->check(CLI::PositiveNumber);
  app.add_flag("--planted", options.planted, "optimize: solve a planted-costate instance");
  app.add_option("--tol", tol, "check: tolerance override; optimize --planted: recovery tolerance")
      ->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "free or constant-input motion");
  auto* opt = app.add_subcommand("optimize", "solve the boundary value problem by shooting");
  auto* swp = app.add_subcommand("sweep", "obstacle strength sweep");
  auto* chk = app.add_subcommand("check", "invariant suite");
  for (auto* sub : {sim, opt, swp, chk}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }
  options.tol = tol;

  try {
    const RunConfig cfg = parse_config(load_document(config_path, preset));
    if (sim->parsed()) return cmd_simulate(cfg, options, std::cout);
    if (opt->parsed()) return cmd_optimize(cfg, options, std::cout);
    if (swp->parsed()) return cmd_sweep(cfg, options, std::cout);
    return cmd_check(cfg, options, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}
