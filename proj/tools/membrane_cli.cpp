// Command line driver: convergence studies, reference studies and the
// penalty lab.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "membrane/experiment.hpp"

namespace {

constexpr int kExitSolver = 2;
constexpr int kExitConfig = 3;

void print_report(const membrane::ErrorReport& rep, const std::vector<std::string>& norms) {
  std::cout << membrane::format_csv(rep, norms);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalty finite element experiments for membranes with embedded particles"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_path;
  long long seed = -1;
  int threads = 0;
  app.add_option("--config", config_path, "INI experiment configuration")->required();
  app.add_option("--out", out_path, "CSV output path (overrides the config)");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--threads", threads, "grids solved concurrently")->check(CLI::PositiveNumber);

  auto* study = app.add_subcommand("study", "convergence study against the exact symmetric solution");
  auto* nonsym = app.add_subcommand("nonsym", "convergence study against a fine-grid reference");
  auto* lab = app.add_subcommand("lab", "abstract penalty bound checks on random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  membrane::ExperimentConfig cfg;
  try {
    cfg = membrane::load_config(config_path);
    if (!out_path.empty()) {
      cfg.output = out_path;
    }
    if (seed >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed);
    }
    if (threads > 0) {
      cfg.threads = threads;
    }
  } catch (const membrane::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (study->parsed()) {
      const auto rep = membrane::run_convergence_study(cfg, cfg.output);
      print_report(rep, cfg.norms);
    } else if (nonsym->parsed()) {
      const auto rep = membrane::run_nonsymmetric_study(cfg, cfg.output);
      print_report(rep, cfg.norms);
    } else if (lab->parsed()) {
      const auto rep = membrane::run_penalty_lab(cfg, cfg.output);
      std::cout << membrane::format_lab_csv(rep);
      if (!rep.all_hold()) {
        std::cerr << "bound violations found\n";
        return 1;
      }
    }
  } catch (const membrane::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const membrane::ReferenceError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const membrane::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
