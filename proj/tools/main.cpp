#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"RCM-constrained hierarchical QP endoscope controller"};
  app.require_subcommand(1);

  std::string run_scenario, run_out = "out";
  auto* run = app.add_subcommand("run", "Run a closed-loop scenario and write log.csv and summary.json");
  run->add_option("--scenario", run_scenario, "Scenario JSON file")->required();
  run->add_option("--out", run_out, "Output directory")->capture_default_str();

  rcmhqp::cli::AuditOptions audit;
  std::string fault;
  auto* check = app.add_subcommand("check", "Finite-difference audit of the analytic Jacobians");
  check->add_option("--samples", audit.samples, "Random configurations")->capture_default_str();
  check->add_option("--seed", audit.seed, "RNG seed")->capture_default_str();
  check->add_option("--inject-fault", fault, "Deliberate fault for a negative control")
      ->check(CLI::IsMember({"rcm-sign"}));

  int bench_cycles = 5000;
  std::string bench_scenario;
  auto* bench = app.add_subcommand("bench", "Time the per-cycle HQP solve over a scenario");
  bench->add_option("--cycles", bench_cycles, "Control cycles (>= 100)")->capture_default_str();
  bench->add_option("--scenario", bench_scenario, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rcmhqp::cli::kExitOk : rcmhqp::cli::kExitConfigError;
  }

  try {
    if (*run) return rcmhqp::cli::cmd_run(run_scenario, run_out, std::cout, std::cerr);
    if (*check) {
      audit.corrupt_rcm_sign = fault == "rcm-sign";
      return rcmhqp::cli::cmd_check(audit, std::cout, std::cerr);
    }
    if (*bench) return rcmhqp::cli::cmd_bench(bench_cycles, bench_scenario, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rcmhqp::cli::kExitConfigError;
  }
  return rcmhqp::cli::kExitConfigError;
}
