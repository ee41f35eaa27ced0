#include "setloc/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "setloc/lp.hpp"

namespace setloc {

std::string_view to_string(Estimator e) {
  return e == Estimator::Chebyshev ? "chebyshev" : "mve";
}

std::string_view to_string(RecalibrationPolicy p) {
  return p == RecalibrationPolicy::Frozen ? "frozen" : "online";
}

Estimator parse_estimator(std::string_view s) {
  if (s == "chebyshev") return Estimator::Chebyshev;
  if (s == "mve") return Estimator::Mve;
  throw std::invalid_argument("unknown estimator '" + std::string(s) + "'");
}

RecalibrationPolicy parse_policy(std::string_view s) {
  if (s == "frozen") return RecalibrationPolicy::Frozen;
  if (s == "online") return RecalibrationPolicy::Online;
  throw std::invalid_argument("unknown recalibration policy '" + std::string(s) + "'");
}

TrajectoryState trajectory_state(double t) {
  const Vec3 center(2.5 * (1.0 + std::cos(t)), 2.5 * std::sin(t), 5.0 * std::sin(t / 2.0));
  const Vec3 velocity(-2.5 * std::sin(t), 2.5 * std::cos(t), 2.5 * std::cos(t / 2.0));
  const Vec3 accel(-2.5 * std::cos(t), -2.5 * std::sin(t), -1.25 * std::sin(t / 2.0));
  const Vec3 tangent = velocity.normalized();
  const Vec3 binormal = velocity.cross(accel).normalized();
  const Vec3 normal = binormal.cross(tangent);
  TrajectoryState s;
  s.center = center;
  s.frame.col(0) = tangent;
  s.frame.col(1) = normal;
  s.frame.col(2) = binormal;
  return s;
}

std::vector<Vec3> receiver_positions(const TrajectoryState& state, const ReceiverLayout& layout) {
  std::vector<Vec3> out;
  out.reserve(layout.size());
  for (const auto& w : layout.points()) out.push_back(state.center + state.frame * w);
  return out;
}

std::vector<RangeMeasurement> simulate_measurements(const TrajectoryState& state,
                                                    const BeaconRegistry& beacons,
                                                    const ReceiverLayout& layout,
                                                    double noise_std, std::uint64_t seed,
                                                    int timestep) {
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise std must be nonnegative");
  const auto receivers = receiver_positions(state, layout);
  std::vector<RangeMeasurement> out;
  out.reserve(beacons.size() * receivers.size());
  for (const auto& beacon : beacons.beacons()) {
    for (std::size_t j = 0; j < receivers.size(); ++j) {
      StreamRng rng(seed, {static_cast<std::uint64_t>(StreamDomain::RangeNoise),
                           static_cast<std::uint64_t>(timestep),
                           static_cast<std::uint64_t>(beacon.id), static_cast<std::uint64_t>(j)});
      const double d = (receivers[j] - beacon.position).norm();
      const double measured = std::max(1e-6, d + noise_std * rng.normal());
      out.push_back({beacon.id, static_cast<int>(j), measured});
    }
  }
  return out;
}

CalibrationDataset generate_calibration_dataset(const CalibrationParams& params, StreamRng& rng) {
  if (params.true_values < 2 || params.readings_per_value < 1)
    throw std::invalid_argument("calibration needs at least 2 true values and 1 reading each");
  if (!(params.range_lower < params.range_upper))
    throw std::invalid_argument("calibration range must satisfy lower < upper");
  if (!(params.epsilon >= 0.0)) throw std::invalid_argument("calibration epsilon must be >= 0");

  CalibrationDataset data;
  for (int k = 0; k < params.true_values; ++k) {
    const double d =
        params.random_true_values
            ? rng.uniform(params.range_lower, params.range_upper)
            : params.range_lower + (params.range_upper - params.range_lower) * k /
                                       (params.true_values - 1);
    double lo = INFINITY;
    double hi = -INFINITY;
    for (int r = 0; r < params.readings_per_value; ++r) {
      const double reading = rng.uniform(d - params.epsilon, d + params.epsilon);
      lo = std::min(lo, reading);
      hi = std::max(hi, reading);
    }
    data.add({d, lo, hi});
  }
  return data;
}

bool in_convex_hull(std::span<const Vec3> vertices, const Vec3& point) {
  if (vertices.empty()) return false;
  const auto n = static_cast<Eigen::Index>(vertices.size());
  LinearProgram lp(Eigen::VectorXd::Zero(n));
  const double tol = 1e-9;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row(i) = -1.0;
    lp.add_constraint(row, 0.0);
  }
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::VectorXd row(n);
    for (Eigen::Index i = 0; i < n; ++i) row(i) = vertices[i](axis);
    lp.add_constraint(row, point(axis) + tol);
    lp.add_constraint(-row, -point(axis) + tol);
  }
  lp.add_constraint(Eigen::VectorXd::Ones(n), 1.0 + tol);
  lp.add_constraint(-Eigen::VectorXd::Ones(n), -1.0 + tol);
  return solve_lp(lp).status.optimal();
}

Scenario Scenario::reference() {
  Scenario s;
  s.beacons = box_beacons(Vec3(-3.0, -6.0, -7.0), Vec3(8.0, 6.0, 7.0));
  s.t_end = 4.0 * std::numbers::pi;
  return s;
}

std::vector<Beacon> Scenario::box_beacons(const Vec3& lo, const Vec3& hi) {
  std::vector<Beacon> out;
  for (int k = 0; k < 8; ++k) {
    out.push_back({k, Vec3((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(),
                           (k & 4) ? hi.z() : lo.z())});
  }
  return out;
}

std::vector<double> Scenario::time_grid() const {
  std::vector<double> out(static_cast<std::size_t>(std::max(timesteps, 0)));
  for (int k = 0; k < timesteps; ++k) {
    out[k] = timesteps == 1 ? t_begin : t_begin + (t_end - t_begin) * k / (timesteps - 1);
  }
  return out;
}

void Scenario::validate() const {
  if (timesteps < 1) throw std::invalid_argument("scenario needs at least one timestep");
  if (!std::isfinite(t_begin) || !std::isfinite(t_end))
    throw std::invalid_argument("scenario time span must be finite");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise std must be nonnegative");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (beacons.size() < 4) throw std::invalid_argument("scenario needs at least 4 beacons");
  BeaconRegistry registry(beacons);
  std::vector<Vec3> corners;
  for (const auto& b : beacons) corners.push_back(b.position);
  for (double t : time_grid()) {
    for (const auto& p : receiver_positions(trajectory_state(t), layout)) {
      if (!in_convex_hull(corners, p))
        throw std::invalid_argument("receiver leaves the beacon convex hull at t=" +
                                    std::to_string(t));
    }
  }
}

namespace {

struct StepEstimate {
  std::vector<SolveKind> status;
  std::vector<Vec3> centers;
  std::vector<double> scores;
  std::vector<int> cuts;
  bool out_of_domain = false;
  bool contains_truth = true;
  int solves = 0;
  double seconds = 0.0;

  bool all_optimal() const {
    return std::all_of(status.begin(), status.end(),
                       [](SolveKind k) { return k == SolveKind::Optimal; });
  }
};

StepEstimate estimate_step(std::span<const RangeMeasurement> measurements,
                           const BeaconRegistry& registry, std::span<const Vec3> truth,
                           const CalibrationPolynomial& phi, Estimator estimator, double tol) {
  StepEstimate out;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    std::vector<RangeMeasurement> mine;
    for (const auto& m : measurements)
      if (m.receiver_id == static_cast<int>(j)) mine.push_back(m);

    out.centers.push_back(Vec3::Zero());
    out.scores.push_back(0.0);
    out.cuts.push_back(0);
    std::optional<BallIntersection> set;
    try {
      set.emplace(feasible_set(mine, registry, phi));
    } catch (const std::domain_error&) {
      out.status.push_back(SolveKind::Infeasible);
      out.out_of_domain = true;
      out.contains_truth = false;
      continue;
    }
    out.out_of_domain = out.out_of_domain || set->out_of_domain();
    out.contains_truth = out.contains_truth && set->margin(truth[j]) >= 0.0;

    const auto start = std::chrono::steady_clock::now();
    if (estimator == Estimator::Chebyshev) {
      ChebyshevOptions opts;
      opts.tol = tol;
      const auto est = chebyshev_center(*set, opts);
      out.status.push_back(est.status);
      out.centers.back() = est.center;
      out.scores.back() = est.radius;
      out.cuts.back() = est.cuts;
    } else {
      MveOptions opts;
      opts.tol = tol;
      const auto est = mve_center(*set, opts);
      out.status.push_back(est.status);
      out.centers.back() = est.center;
      out.scores.back() = est.log_det;
    }
    out.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ++out.solves;
  }
  return out;
}

double max_distance(std::span<const RangeMeasurement> measurements) {
  double m = 0.0;
  for (const auto& r : measurements) m = std::max(m, r.distance);
  return m;
}

}  // namespace

RunSummary summarize(std::span<const TimestepRecord> records) {
  RunSummary s;
  s.timesteps = static_cast<int>(records.size());
  double cuts = 0.0;
  double solves = 0.0;
  for (const auto& r : records) {
    if (r.recalibrated) ++s.recalibrations;
    cuts += r.cuts;
    solves += r.solves;
    if (r.status != SolveKind::Optimal) {
      ++s.infeasible;
      continue;
    }
    ++s.feasible;
    s.mean_percent_error += r.percent_error;
    s.max_percent_error = std::max(s.max_percent_error, r.percent_error);
    if (r.pose_status != SolveKind::Optimal) continue;
    ++s.posed;
    s.mean_corrected_percent_error += r.corrected_percent_error;
    s.max_corrected_percent_error = std::max(s.max_corrected_percent_error, r.corrected_percent_error);
    s.mean_orientation_error_deg += r.orientation_error_deg;
    s.max_orientation_error_deg = std::max(s.max_orientation_error_deg, r.orientation_error_deg);
  }
  if (s.feasible > 0) s.mean_percent_error /= s.feasible;
  if (s.posed > 0) {
    s.mean_corrected_percent_error /= s.posed;
    s.mean_orientation_error_deg /= s.posed;
  }
  if (solves > 0) s.mean_cuts = cuts / solves;
  return s;
}

RunReport run_pipeline(const Scenario& scenario) {
  scenario.validate();
  const BeaconRegistry registry(scenario.beacons);
  const FitOptions fit_options{scenario.tol};

  CalibrationDataset history;
  CalibrationPolynomial phi = CalibrationPolynomial::identity(0.0, 1.0);
  if (scenario.phi) {
    phi = *scenario.phi;
  } else {
    StreamRng rng(scenario.seed, {static_cast<std::uint64_t>(StreamDomain::Calibration)});
    history = generate_calibration_dataset(scenario.calibration, rng);
    phi = fit_phi(history, scenario.calibration.degree, fit_options).polynomial;
  }

  RunReport report;
  report.initial_phi = phi;
  // Corrected receiver positions from the most recent fitted pose.
  std::vector<std::optional<Vec3>> last_known(scenario.layout.size());
  Mat3 reference = Mat3::Identity();
  double seconds = 0.0;
  int solves = 0;

  const auto grid = scenario.time_grid();
  for (int k = 0; k < scenario.timesteps; ++k) {
    const auto state = trajectory_state(grid[k]);
    const auto truth = receiver_positions(state, scenario.layout);
    auto measurements = simulate_measurements(state, registry, scenario.layout,
                                              scenario.noise_std, scenario.seed, k);

    TimestepRecord rec;
    rec.index = k;
    rec.t = grid[k];
    rec.true_center = truth.front();
    rec.true_rotation = state.frame;
    rec.max_range = max_distance(measurements);

    auto step = estimate_step(measurements, registry, truth, phi, scenario.estimator, scenario.tol);
    seconds += step.seconds;
    solves += step.solves;

    const bool trouble = !step.all_optimal() || step.out_of_domain;
    std::vector<CalibrationSample> fresh;
    if (scenario.policy == RecalibrationPolicy::Online && trouble) {
      for (const auto& m : measurements) {
        const auto& known = last_known[m.receiver_id];
        if (!known) continue;
        fresh.push_back({(*known - registry.position(m.beacon_id)).norm(), m.distance, m.distance});
      }
    }
    if (!fresh.empty()) {
      try {
        phi = recalibrate(phi, history, fresh, scenario.calibration.degree, fit_options);
        for (const auto& s : fresh) history.add(s);
        rec.recalibrated = true;
        step = estimate_step(measurements, registry, truth, phi, scenario.estimator,
                             scenario.tol);
        seconds += step.seconds;
        solves += step.solves;
      } catch (const CalibrationError&) {
      }
    }

    rec.status = step.status.front();
    rec.pose_status = SolveKind::Infeasible;
    rec.out_of_domain = step.out_of_domain;
    rec.contains_truth = step.contains_truth;
    for (std::size_t j = 0; j < step.status.size(); ++j) {
      if (step.status[j] != SolveKind::Optimal) continue;
      rec.cuts += step.cuts[j];
      ++rec.solves;
    }
    rec.receiver_status = step.status;
    rec.receiver_estimates = step.centers;
    rec.receiver_scores = step.scores;
    rec.receiver_cuts = step.cuts;
    if (rec.status == SolveKind::Optimal) {
      rec.estimated_center = step.centers.front();
      rec.percent_error = 100.0 * (rec.estimated_center - rec.true_center).norm() / rec.max_range;
    }
    if (step.all_optimal()) {
      const auto fit = procrustes(scenario.layout, step.centers, reference);
      reference = fit.pose.rotation;
      const auto corrected = corrected_positions(fit, scenario.layout);
      for (std::size_t j = 0; j < corrected.size(); ++j) last_known[j] = corrected[j];
      rec.pose_status = SolveKind::Optimal;
      rec.corrected_center = fit.pose.origin;
      rec.estimated_rotation = fit.pose.rotation;
      rec.residual = fit.residual;
      rec.corrected_percent_error =
          100.0 * (rec.corrected_center - state.center).norm() / rec.max_range;
      rec.orientation_error_deg =
          geodesic_distance(rec.true_rotation, rec.estimated_rotation) * 180.0 / std::numbers::pi;
    }
    report.records.push_back(std::move(rec));
    report.measurements.push_back(std::move(measurements));
  }

  report.final_phi = phi;
  report.calibration = history;
  report.summary = summarize(report.records);
  report.mean_solve_seconds = solves > 0 ? seconds / solves : 0.0;
  return report;
}

}  // namespace setloc
