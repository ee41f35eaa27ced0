#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "setloc/simulation.hpp"

using namespace setloc;

TEST(Trajectory, StartsAtFiveZeroZero) {
  const auto s = trajectory_state(0.0);
  EXPECT_LE((s.center - Vec3(5, 0, 0)).norm(), 1e-15);
}

TEST(Trajectory, FrameIsProperRotation) {
  for (double t = 0.0; t < 4.0 * std::numbers::pi; t += 0.1) {
    const auto s = trajectory_state(t);
    EXPECT_LE((s.frame.transpose() * s.frame - Mat3::Identity()).norm(), 1e-10);
    EXPECT_NEAR(s.frame.determinant(), 1.0, 1e-10);
  }
}

TEST(Trajectory, TangentAndNormalMatchFiniteDifferences) {
  const double t = 1.3;
  const double h = 1e-5;
  const Vec3 diff = (trajectory_state(t + h).center - trajectory_state(t - h).center) / (2 * h);
  EXPECT_LE((trajectory_state(t).frame.col(0) - diff.normalized()).norm(), 1e-6);

  const Vec3 dtangent =
      (trajectory_state(t + h).frame.col(0) - trajectory_state(t - h).frame.col(0)) / (2 * h);
  EXPECT_LE((trajectory_state(t).frame.col(1) - dtangent.normalized()).norm(), 1e-6);
}

TEST(Measurements, ZeroNoiseIsExact) {
  const auto scenario = Scenario::reference();
  const BeaconRegistry reg(scenario.beacons);
  const auto state = trajectory_state(0.7);
  const auto truth = receiver_positions(state, scenario.layout);
  const auto m = simulate_measurements(state, reg, scenario.layout, 0.0, 1, 3);
  ASSERT_EQ(m.size(), reg.size() * scenario.layout.size());
  for (const auto& r : m)
    EXPECT_DOUBLE_EQ(r.distance, (truth[r.receiver_id] - reg.position(r.beacon_id)).norm());
}

TEST(Measurements, SeededStreamIsReproducible) {
  const auto scenario = Scenario::reference();
  const BeaconRegistry reg(scenario.beacons);
  const auto state = trajectory_state(2.0);
  const auto a = simulate_measurements(state, reg, scenario.layout, 0.5, 42, 5);
  const auto b = simulate_measurements(state, reg, scenario.layout, 0.5, 42, 5);
  const auto c = simulate_measurements(state, reg, scenario.layout, 0.5, 43, 5);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].distance, b[i].distance);
    differs = differs || a[i].distance != c[i].distance;
  }
  EXPECT_TRUE(differs);
}

TEST(Measurements, NoiseMoments) {
  // 10^4 independent draws for one pair, one per timestep stream.
  BeaconRegistry reg;
  reg.add({0, Vec3(-3, -6, -7)});
  const auto layout = ReceiverLayout::unit_axes();
  const auto state = trajectory_state(1.0);
  const double d = (state.center - reg.position(0)).norm();
  double sum = 0.0;
  double sum_sq = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const auto m = simulate_measurements(state, reg, layout, 0.5, 7, k);
    const double e = m[0].distance - d;
    sum += e;
    sum_sq += e * e;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_LE(std::abs(mean), 3.0 * 0.5 / 100.0);
  EXPECT_NEAR(var, 0.25, 0.05 * 0.25);
}

TEST(CalibrationData, ZeroEpsilonAndWidthAndDeterminism) {
  CalibrationParams p;
  p.epsilon = 0.0;
  StreamRng rng(1);
  const auto flat = generate_calibration_dataset(p, rng);
  for (const auto& s : flat.samples()) {
    EXPECT_EQ(s.measured_low, s.true_distance);
    EXPECT_EQ(s.measured_high, s.true_distance);
  }
  const CalibrationParams defaults;
  StreamRng r1(9);
  StreamRng r2(9);
  const auto a = generate_calibration_dataset(defaults, r1);
  const auto b = generate_calibration_dataset(defaults, r2);
  ASSERT_EQ(a.size(), 25u);
  EXPECT_EQ(a.samples(), b.samples());
  for (const auto& s : a.samples()) {
    EXPECT_LE(s.measured_high - s.measured_low, 0.5);
    EXPECT_GE(s.true_distance, 4.0);
    EXPECT_LE(s.true_distance, 18.0);
    EXPECT_GE(s.measured_low, s.true_distance - 0.25);
    EXPECT_LE(s.measured_high, s.true_distance + 0.25);
  }
}

TEST(ConvexHull, Membership) {
  const auto corners = Scenario::box_beacons(Vec3(-1, -1, -1), Vec3(1, 1, 1));
  std::vector<Vec3> pts;
  for (const auto& b : corners) pts.push_back(b.position);
  EXPECT_TRUE(in_convex_hull(pts, Vec3(0.2, -0.3, 0.9)));
  EXPECT_TRUE(in_convex_hull(pts, Vec3(1, 1, 1)));
  EXPECT_FALSE(in_convex_hull(pts, Vec3(1.01, 0, 0)));
}

TEST(Scenario, PaperGeometryRangesInsideCalibrationInterval) {
  const auto s = Scenario::reference();
  EXPECT_NO_THROW(s.validate());
  const BeaconRegistry reg(s.beacons);
  for (double t : s.time_grid()) {
    for (const auto& p : receiver_positions(trajectory_state(t), s.layout)) {
      for (const auto& b : s.beacons) {
        const double d = (p - b.position).norm();
        EXPECT_GE(d, 4.0);
        EXPECT_LE(d, 18.0);
      }
    }
  }
}

TEST(Scenario, RejectsTrajectoryOutsideHull) {
  auto s = Scenario::reference();
  s.beacons = Scenario::box_beacons(Vec3(-1, -1, -1), Vec3(1, 1, 1));
  EXPECT_THROW(s.validate(), std::invalid_argument);
  auto t = Scenario::reference();
  t.timesteps = 0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  auto u = Scenario::reference();
  u.noise_std = -1.0;
  EXPECT_THROW(u.validate(), std::invalid_argument);
}

TEST(Pipeline, ZeroNoiseIdentityPhiIsExact) {
  auto s = Scenario::reference();
  s.noise_std = 0.0;
  s.phi = CalibrationPolynomial::identity(1.0, 30.0);
  s.estimator = Estimator::Chebyshev;
  s.timesteps = 20;
  s.tol = 1e-11;
  const auto r = run_pipeline(s);
  ASSERT_EQ(r.summary.infeasible, 0);
  for (const auto& rec : r.records) {
    EXPECT_LE(rec.percent_error, 1e-6) << "t=" << rec.t;
    EXPECT_LE(rec.orientation_error_deg, 1e-6) << "t=" << rec.t;
  }
  EXPECT_LE(r.summary.mean_percent_error, 1e-6);
}

TEST(Pipeline, LowNoiseContainsTruth) {
  auto s = Scenario::reference();
  s.noise_std = 0.05;
  s.timesteps = 25;
  s.estimator = Estimator::Chebyshev;
  const auto r = run_pipeline(s);
  for (const auto& rec : r.records) {
    EXPECT_TRUE(rec.contains_truth) << "t=" << rec.t;
    EXPECT_EQ(rec.status, SolveKind::Optimal);
  }
}

TEST(Pipeline, PercentErrorRecomputes) {
  auto s = Scenario::reference();
  s.timesteps = 15;
  s.estimator = Estimator::Chebyshev;
  const auto r = run_pipeline(s);
  for (std::size_t k = 0; k < r.records.size(); ++k) {
    const auto& rec = r.records[k];
    double max_range = 0.0;
    for (const auto& m : r.measurements[k]) max_range = std::max(max_range, m.distance);
    EXPECT_EQ(rec.max_range, max_range);
    if (rec.status != SolveKind::Optimal) continue;
    EXPECT_EQ(rec.percent_error,
              100.0 * (rec.estimated_center - rec.true_center).norm() / rec.max_range);
  }
  const auto again = summarize(r.records);
  EXPECT_EQ(again.mean_percent_error, r.summary.mean_percent_error);
}

TEST(Pipeline, DeterministicReport) {
  auto s = Scenario::reference();
  s.timesteps = 10;
  const auto a = run_pipeline(s);
  const auto b = run_pipeline(s);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].estimated_center, b.records[k].estimated_center);
    EXPECT_EQ(a.records[k].status, b.records[k].status);
  }
}

TEST(Pipeline, OnlinePolicyRecalibrates) {
  auto s = Scenario::reference();
  s.timesteps = 30;
  s.noise_std = 0.125;
  s.estimator = Estimator::Chebyshev;
  s.policy = RecalibrationPolicy::Online;
  s.calibration.range_upper = 12.0;
  const auto r = run_pipeline(s);
  EXPECT_GT(r.summary.recalibrations, 0);
  EXPECT_GT(r.final_phi.domain_upper(), r.initial_phi.domain_upper());
  EXPECT_GT(r.calibration.size(), 25u);
}

TEST(Policies, ParseRoundTrip) {
  EXPECT_EQ(parse_estimator(to_string(Estimator::Chebyshev)), Estimator::Chebyshev);
  EXPECT_EQ(parse_estimator("mve"), Estimator::Mve);
  EXPECT_EQ(parse_policy(to_string(RecalibrationPolicy::Online)), RecalibrationPolicy::Online);
  EXPECT_THROW(parse_estimator("least-squares"), std::invalid_argument);
  EXPECT_THROW(parse_policy("sometimes"), std::invalid_argument);
}
