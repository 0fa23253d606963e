// Command-line experiment runner.
//
//   slns run <config.yaml> [--output DIR] [--seed N] [--workers N] [-v]
//   slns list
//
// Exit status: 0 when every check passes, 1 when a check fails, 2 on usage
// or configuration errors, 3 on numerical failures.

#include "slns/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Lagrangian Navier-Stokes experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  int verbosity = 0;

  auto* run = app.add_subcommand("run", "run the experiment named in a config file");
  run->add_option("config", config_path, "YAML experiment configuration")->required();
  run->add_option("-o,--output", output_dir, "output directory (overrides the config)");
  run->add_option("-s,--seed", seed, "random seed (overrides the config)");
  run->add_option("-w,--workers", workers, "worker threads; 0 uses every hardware thread")->check(CLI::NonNegativeNumber);
  run->add_flag("-v,--verbose", verbosity, "print the summary (repeat for per-file listing)");

  app.add_subcommand("list", "list registered experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (app.got_subcommand("list")) {
    std::cout << slns::list_experiments();
    return 0;
  }

  try {
    auto cfg = slns::load_config(config_path);
    if (seed) cfg.solver.seed = *seed;
    if (workers) cfg.solver.workers = *workers == 0 ? slns::default_workers() : *workers;
    if (!output_dir.empty()) cfg.output_dir = output_dir;

    const auto result = slns::run_experiment(cfg);
    slns::write_result(result, cfg.output_dir);
    if (verbosity > 0) std::cout << result.summary;
    if (verbosity > 1)
      for (const auto& [name, text] : result.files) std::cout << "wrote " << cfg.output_dir << '/' << name << '\n';
    std::cout << cfg.experiment << ": " << (result.pass ? "PASS" : "FAIL") << '\n';
    return result.pass ? 0 : 1;
  } catch (const slns::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const slns::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
