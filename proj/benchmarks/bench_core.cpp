#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "setloc/calibration.hpp"
#include "setloc/lp.hpp"
#include "setloc/position.hpp"
#include "setloc/rng.hpp"
#include "setloc/simulation.hpp"

using namespace setloc;

namespace {

// Eight beacons on the reference box, ranges to an interior point plus slack.
BallIntersection box_instance(double slack) {
  const auto beacons = Scenario::box_beacons(Vec3(-3, -6, -7), Vec3(8, 6, 7));
  const Vec3 target(2.0, 1.0, -0.5);
  std::vector<Ball> balls;
  for (const auto& b : beacons) balls.push_back({b.position, (b.position - target).norm() + slack});
  return BallIntersection(std::move(balls));
}

void BM_SolveLp(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  LinearProgram lp(Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); }));
  for (Eigen::Index i = 0; i < 4 * n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
    lp.add_constraint(row.normalized(), 1.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_lp(lp));
}
BENCHMARK(BM_SolveLp)->Arg(4)->Arg(8)->Arg(16);

void BM_ChebyshevCenter(benchmark::State& state) {
  const auto set = box_instance(0.25 * static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(chebyshev_center(set));
}
BENCHMARK(BM_ChebyshevCenter)->Arg(1)->Arg(4);

void BM_MveCenter(benchmark::State& state) {
  const auto set = box_instance(0.25 * static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mve_center(set));
}
BENCHMARK(BM_MveCenter)->Arg(1)->Arg(4);

void BM_FitPhi(benchmark::State& state) {
  StreamRng rng(3);
  const auto data = generate_calibration_dataset(CalibrationParams{}, rng);
  const int degree = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_phi(data, degree));
}
BENCHMARK(BM_FitPhi)->Arg(2)->Arg(4)->Arg(6);

void BM_PaperPipeline(benchmark::State& state) {
  auto s = Scenario::reference();
  s.timesteps = 20;
  s.estimator = state.range(0) == 0 ? Estimator::Chebyshev : Estimator::Mve;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(s));
}
BENCHMARK(BM_PaperPipeline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
