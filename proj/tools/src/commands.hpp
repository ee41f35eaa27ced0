#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace setloc::cli {

enum ExitCode : int { kOk = 0, kBadInput = 1, kSolverFailure = 2 };

struct CalibrateArgs {
  std::filesystem::path data;
  std::filesystem::path out;
  int degree = 4;
  double tol = 1e-7;
};

struct LocalizeArgs {
  std::filesystem::path measurements;
  std::filesystem::path phi;
  /// Defaults to the eight box-corner beacons of the reference scenario.
  std::optional<std::filesystem::path> beacons;
  std::filesystem::path out;
  std::string method = "mve";
  double tol = 1e-7;
};

struct SimulateArgs {
  std::optional<std::filesystem::path> scenario;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> degree;
  std::optional<std::string> method;
  std::optional<std::string> policy;
  std::optional<double> tol;
};

struct ReportArgs {
  std::filesystem::path run;
};

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err);
int cmd_localize(const LocalizeArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);

/// Tolerance from SETLOC_TOL when set to a positive number, else `fallback`.
double default_tolerance(double fallback = 1e-7);

}  // namespace setloc::cli
