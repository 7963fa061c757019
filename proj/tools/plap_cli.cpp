// plap: scenario runner for the p-Laplacian oscillation toolkit.
//
//   plap sweep --config scenario.cfg --out out --jobs 4 --seed 7

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "plap/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"p-Laplacian time maps, limit profiles and oscillatory solutions"};
  std::string sub, config;
  plap::RunOptions opt;
  app.add_option("subcommand", sub, "timemap | profile | solve | verify | sweep")
      ->required()
      ->check(CLI::IsMember({"timemap", "profile", "solve", "verify", "sweep"}));
  app.add_option("--config", config, "scenario file")->required();
  app.add_option("--out", opt.out_dir, "output directory (overrides output_dir)");
  app.add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "seed for randomized checks");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const plap::ScenarioConfig cfg = plap::load_config(config);
    const plap::Scenario sc(cfg);
    plap::run(sub, sc, opt, std::cout);
  } catch (...) {
    return plap::exit_code_for_current_exception(std::cerr);
  }
  return 0;
}
