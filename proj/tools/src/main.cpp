#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace setloc::cli;
  CLI::App app{"Set-membership localization from range measurements"};
  app.require_subcommand(1);

  const double tol_default = default_tolerance();

  CalibrateArgs cal;
  cal.tol = tol_default;
  auto* calibrate = app.add_subcommand("calibrate", "Fit the calibration polynomial");
  calibrate->add_option("data", cal.data, "CSV with d_true,D_low,D_high")->required();
  calibrate->add_option("--degree", cal.degree, "Polynomial degree")->check(CLI::Range(1, 12));
  calibrate->add_option("--tol", cal.tol, "Solver gap tolerance")->check(CLI::PositiveNumber);
  calibrate->add_option("--out", cal.out, "Output polynomial JSON")->required();

  LocalizeArgs loc;
  loc.tol = tol_default;
  std::string beacons;
  auto* localize = app.add_subcommand("localize", "Estimate receiver positions");
  localize->add_option("measurements", loc.measurements, "CSV with t,receiver_id,beacon_id,D")
      ->required();
  localize->add_option("--phi", loc.phi, "Calibration polynomial JSON")->required();
  localize->add_option("--beacons", beacons, "CSV with id,x,y,z");
  localize->add_option("--method", loc.method, "Estimator")
      ->check(CLI::IsMember({"chebyshev", "mve"}));
  localize->add_option("--tol", loc.tol, "Solver tolerance")->check(CLI::PositiveNumber);
  localize->add_option("--out", loc.out, "Output estimate CSV")->required();

  SimulateArgs sim;
  std::string scenario;
  std::uint64_t seed = 0;
  int degree = 0;
  std::string method;
  std::string policy;
  double tol = 0.0;
  auto* simulate = app.add_subcommand("simulate", "Run the simulated trajectory");
  simulate->add_option("--scenario", scenario, "Scenario JSON (default: reference setup)");
  auto* seed_opt = simulate->add_option("--seed", seed, "Random seed");
  auto* degree_opt =
      simulate->add_option("--degree", degree, "Polynomial degree")->check(CLI::Range(1, 12));
  simulate->add_option("--method", method, "Estimator")->check(CLI::IsMember({"chebyshev", "mve"}));
  simulate->add_option("--policy", policy, "Recalibration policy")
      ->check(CLI::IsMember({"frozen", "online"}));
  auto* tol_opt = simulate->add_option("--tol", tol, "Solver tolerance")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Output directory")->required();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Summarize a simulation run");
  report->add_option("run", rep.run, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  if (calibrate->parsed()) return cmd_calibrate(cal, std::cout, std::cerr);
  if (localize->parsed()) {
    if (!beacons.empty()) loc.beacons = beacons;
    return cmd_localize(loc, std::cout, std::cerr);
  }
  if (simulate->parsed()) {
    if (!scenario.empty()) sim.scenario = scenario;
    if (*seed_opt) sim.seed = seed;
    if (*degree_opt) sim.degree = degree;
    if (!method.empty()) sim.method = method;
    if (!policy.empty()) sim.policy = policy;
    if (*tol_opt) sim.tol = tol;
    else if (std::getenv("SETLOC_TOL")) sim.tol = tol_default;
    return cmd_simulate(sim, std::cout, std::cerr);
  }
  return cmd_report(rep, std::cout, std::cerr);
}
