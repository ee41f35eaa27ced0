#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "setloc/calibration.hpp"
#include "setloc/linalg.hpp"
#include "setloc/orientation.hpp"
#include "setloc/position.hpp"
#include "setloc/rng.hpp"

namespace setloc {

enum class Estimator { Chebyshev, Mve };
enum class RecalibrationPolicy { Frozen, Online };

std::string_view to_string(Estimator e);
std::string_view to_string(RecalibrationPolicy p);
Estimator parse_estimator(std::string_view s);
RecalibrationPolicy parse_policy(std::string_view s);

struct TrajectoryState {
  Vec3 center;
  /// Columns: tangent, normal, binormal.
  Mat3 frame;
};

/// Helix (2.5 (1 + cos t), 2.5 sin t, 5 sin(t / 2)) with its Frenet-Serret frame.
TrajectoryState trajectory_state(double t);

/// Receiver positions center + frame * w_j.
std::vector<Vec3> receiver_positions(const TrajectoryState& state, const ReceiverLayout& layout);

/// One noisy range per (beacon, receiver): D = max(1e-6, d + N(0, std^2)).
/// Noise for each pair comes from its own stream keyed by
/// (seed, RangeNoise, timestep, beacon id, receiver index).
std::vector<RangeMeasurement> simulate_measurements(const TrajectoryState& state,
                                                    const BeaconRegistry& beacons,
                                                    const ReceiverLayout& layout,
                                                    double noise_std, std::uint64_t seed,
                                                    int timestep);

struct CalibrationParams {
  int degree = 4;
  double range_lower = 4.0;
  double range_upper = 18.0;
  int true_values = 25;
  int readings_per_value = 100;
  double epsilon = 0.25;
  /// Draw the true distances at random instead of on an even grid.
  bool random_true_values = false;
};

/// True distances over [range_lower, range_upper]; readings uniform on
/// [d - epsilon, d + epsilon]; each sample keeps the min and max reading.
CalibrationDataset generate_calibration_dataset(const CalibrationParams& params, StreamRng& rng);

/// Convex-hull membership by LP feasibility of the barycentric weights.
bool in_convex_hull(std::span<const Vec3> vertices, const Vec3& point);

struct Scenario {
  std::vector<Beacon> beacons;
  ReceiverLayout layout = ReceiverLayout::unit_axes();
  int timesteps = 100;
  double t_begin = 0.0;
  double t_end = 0.0;
  double noise_std = 0.5;
  std::uint64_t seed = 1;
  CalibrationParams calibration;
  /// Replaces the fitted phi when set.
  std::optional<CalibrationPolynomial> phi;
  Estimator estimator = Estimator::Mve;
  RecalibrationPolicy policy = RecalibrationPolicy::Frozen;
  double tol = 1e-7;

  /// Eight beacons at the corners of [-3, 8] x [-6, 6] x [-7, 7], 100 steps
  /// over t in [0, 4 pi], noise std 0.5, degree-4 phi.
  static Scenario reference();
  /// Box corners as beacons with ids 0..7.
  static std::vector<Beacon> box_beacons(const Vec3& lo, const Vec3& hi);

  std::vector<double> time_grid() const;
  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

struct TimestepRecord {
  int index = 0;
  double t = 0.0;
  /// Estimator status for the center-of-mass receiver (receiver 0).
  SolveKind status = SolveKind::Optimal;
  /// Optimal only when every receiver was estimated and the pose was fitted.
  SolveKind pose_status = SolveKind::Optimal;
  Vec3 true_center = Vec3::Zero();
  /// Receiver-0 estimate.
  Vec3 estimated_center = Vec3::Zero();
  /// Rigid-body corrected origin r0 (valid when pose_status is Optimal).
  Vec3 corrected_center = Vec3::Zero();
  double max_range = 0.0;
  /// 100 |estimate - truth| / max_ij D_ij for receiver 0.
  double percent_error = 0.0;
  double corrected_percent_error = 0.0;
  /// Cuts and solve count over the receivers whose estimate succeeded.
  int cuts = 0;
  int solves = 0;
  Mat3 true_rotation = Mat3::Identity();
  Mat3 estimated_rotation = Mat3::Identity();
  double orientation_error_deg = 0.0;
  double residual = 0.0;
  bool out_of_domain = false;
  bool recalibrated = false;
  /// Every true receiver position lies in its feasible set.
  bool contains_truth = false;
  /// Per-receiver status, estimate and size (inscribed radius or log det P).
  std::vector<SolveKind> receiver_status;
  std::vector<Vec3> receiver_estimates;
  std::vector<double> receiver_scores;
  std::vector<int> receiver_cuts;
};

struct RunSummary {
  int timesteps = 0;
  /// Receiver-0 feasibility.
  int feasible = 0;
  int infeasible = 0;
  /// Timesteps with a fitted pose.
  int posed = 0;
  int recalibrations = 0;
  double mean_percent_error = 0.0;
  double max_percent_error = 0.0;
  double mean_corrected_percent_error = 0.0;
  double max_corrected_percent_error = 0.0;
  double mean_orientation_error_deg = 0.0;
  double max_orientation_error_deg = 0.0;
  /// Cuts per successful solve.
  double mean_cuts = 0.0;
};

/// Recomputes the summary from per-timestep records. Position statistics skip
/// steps where receiver 0 is infeasible; pose statistics skip steps without a
/// fitted pose.
RunSummary summarize(std::span<const TimestepRecord> records);

struct RunReport {
  std::vector<TimestepRecord> records;
  RunSummary summary;
  CalibrationPolynomial initial_phi = CalibrationPolynomial::identity(0.0, 1.0);
  CalibrationPolynomial final_phi = CalibrationPolynomial::identity(0.0, 1.0);
  /// Samples behind final_phi (empty when phi was supplied).
  CalibrationDataset calibration;
  /// Wall-clock per estimator solve; informational and never serialized.
  double mean_solve_seconds = 0.0;
  /// Raw measurements per timestep, kept for export.
  std::vector<std::vector<RangeMeasurement>> measurements;
};

RunReport run_pipeline(const Scenario& scenario);

}  // namespace setloc
