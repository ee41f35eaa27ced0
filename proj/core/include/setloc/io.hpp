#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "setloc/calibration.hpp"
#include "setloc/position.hpp"
#include "setloc/simulation.hpp"

namespace setloc {

/// Malformed input; the message names the source and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip text for a double ("%.17g").
std::string format_double(double v);

// Calibration CSV: d_true,D_low,D_high
CalibrationDataset read_calibration_csv(std::istream& in, const std::string& source = "<input>");
void write_calibration_csv(std::ostream& out, const CalibrationDataset& data);

// Polynomial JSON: {"degree": n, "coefficients": [a0..an], "domain": [lo, hi]}
CalibrationPolynomial read_polynomial_json(std::istream& in, const std::string& source = "<input>");
void write_polynomial_json(std::ostream& out, const CalibrationPolynomial& phi);

// Measurement CSV: t,receiver_id,beacon_id,D
struct TimedMeasurement {
  double t = 0.0;
  RangeMeasurement range;
};
SolveKind parse_solve_kind(std::string_view s);
std::vector<TimedMeasurement> read_measurements_csv(std::istream& in,
                                                    const std::string& source = "<input>");
void write_measurements_csv(std::ostream& out, const std::vector<TimedMeasurement>& rows);

// Beacon CSV: id,x,y,z
std::vector<Beacon> read_beacons_csv(std::istream& in, const std::string& source = "<input>");
void write_beacons_csv(std::ostream& out, const std::vector<Beacon>& beacons);

// Estimate CSV: t,receiver_id,method,x,y,z,l_or_logdet,cuts,status
struct EstimateRow {
  double t = 0.0;
  int receiver_id = 0;
  Estimator method = Estimator::Mve;
  Vec3 position = Vec3::Zero();
  double score = 0.0;
  int cuts = 0;
  SolveKind status = SolveKind::Optimal;
};
void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows);

// Pose CSV: t,qw,qx,qy,qz,x0,y0,z0,residual
struct PoseRow {
  double t = 0.0;
  Pose pose;
  double residual = 0.0;
};
void write_pose_csv(std::ostream& out, const std::vector<PoseRow>& rows);

Scenario read_scenario_json(std::istream& in, const std::string& source = "<input>");
void write_scenario_json(std::ostream& out, const Scenario& scenario);

/// One row per timestep with truth, estimate and error columns.
void write_run_csv(std::ostream& out, const RunReport& report);
void write_summary_json(std::ostream& out, const RunReport& report);
/// Reads back the scalar columns of write_run_csv (per-receiver data is not stored).
std::vector<TimestepRecord> read_run_csv(std::istream& in, const std::string& source = "<input>");
/// Reads the summary block written by write_summary_json.
RunSummary read_summary_json(std::istream& in, const std::string& source = "<input>");

/// Writes run.csv, summary.json, measurements.csv, poses.csv, phi_initial.json,
/// phi_final.json and the plot tables into `dir`, creating it if needed.
void write_run_directory(const std::filesystem::path& dir, const Scenario& scenario,
                         const RunReport& report);

/// Plot tables.
void write_trajectory_plot_csv(std::ostream& out, const RunReport& report);
void write_error_plot_csv(std::ostream& out, const RunReport& report);
void write_phi_plot_csv(std::ostream& out, const CalibrationDataset& data,
                        const CalibrationPolynomial& phi, int points = 200);

}  // namespace setloc
