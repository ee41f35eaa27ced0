#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "setloc/io.hpp"

namespace setloc::cli {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  return out;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Runs `body`, mapping input errors to exit 1 and solver errors to exit 2.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const UnknownBeaconError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const CalibrationError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}

}  // namespace

double default_tolerance(double fallback) {
  if (const char* env = std::getenv("SETLOC_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && *end == '\0' && v > 0.0 && std::isfinite(v)) return v;
  }
  return fallback;
}

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto in = open_input(args.data);
    const auto data = read_calibration_csv(in, args.data.string());
    if (data.empty()) throw ParseError(args.data.string() + ": no calibration rows");
    data.validate();
    const auto fit = fit_phi(data, args.degree, FitOptions{args.tol});
    auto file = open_output(args.out);
    write_polynomial_json(file, fit.polynomial);
    out << "objective " << format_double(fit.objective) << '\n';
    out << "min_bound_slack " << format_double(fit.min_bound_slack) << '\n';
    out << "samples " << data.size() << '\n';
    out << "domain " << format_double(fit.polynomial.domain_lower()) << ' '
        << format_double(fit.polynomial.domain_upper()) << '\n';
    return kOk;
  });
}

int cmd_localize(const LocalizeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Estimator method = parse_estimator(args.method);
    auto min = open_input(args.measurements);
    const auto rows = read_measurements_csv(min, args.measurements.string());
    auto pin = open_input(args.phi);
    const auto phi = read_polynomial_json(pin, args.phi.string());
    std::vector<Beacon> beacons = Scenario::reference().beacons;
    if (args.beacons) {
      auto bin = open_input(*args.beacons);
      beacons = read_beacons_csv(bin, args.beacons->string());
    }
    const BeaconRegistry registry(beacons);
    for (const auto& r : rows) registry.position(r.range.beacon_id);

    // Group by (t, receiver) in order of first appearance.
    std::vector<std::pair<double, int>> keys;
    std::map<std::pair<double, int>, std::vector<RangeMeasurement>> groups;
    for (const auto& r : rows) {
      const auto key = std::make_pair(r.t, r.range.receiver_id);
      auto [it, inserted] = groups.try_emplace(key);
      if (inserted) keys.push_back(key);
      it->second.push_back(r.range);
    }

    std::vector<EstimateRow> estimates;
    int infeasible = 0;
    for (const auto& key : keys) {
      EstimateRow row;
      row.t = key.first;
      row.receiver_id = key.second;
      row.method = method;
      try {
        const auto set = feasible_set(groups[key], registry, phi);
        if (method == Estimator::Chebyshev) {
          const auto est = chebyshev_center(set, ChebyshevOptions{args.tol});
          row.position = est.center;
          row.score = est.radius;
          row.cuts = est.cuts;
          row.status = est.status;
        } else {
          const auto est = mve_center(set, MveOptions{args.tol});
          row.position = est.center;
          row.score = est.log_det;
          row.status = est.status;
        }
      } catch (const std::domain_error&) {
        row.status = SolveKind::Infeasible;
      }
      if (row.status != SolveKind::Optimal) ++infeasible;
      estimates.push_back(row);
    }
    auto file = open_output(args.out);
    write_estimates_csv(file, estimates);
    out << "estimates " << estimates.size() << '\n';
    out << "infeasible " << infeasible << '\n';
    return kOk;
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario scenario = Scenario::reference();
    if (args.scenario) {
      auto in = open_input(*args.scenario);
      scenario = read_scenario_json(in, args.scenario->string());
    }
    if (args.seed) scenario.seed = *args.seed;
    if (args.degree) scenario.calibration.degree = *args.degree;
    if (args.method) scenario.estimator = parse_estimator(*args.method);
    if (args.policy) scenario.policy = parse_policy(*args.policy);
    if (args.tol) scenario.tol = *args.tol;
    scenario.validate();

    const auto report = run_pipeline(scenario);
    write_run_directory(args.out, scenario, report);
    const auto& s = report.summary;
    out << "timesteps " << s.timesteps << '\n'
        << "infeasible " << s.infeasible << '\n'
        << "mean_percent_error " << fixed(s.mean_percent_error) << '\n'
        << "max_percent_error " << fixed(s.max_percent_error) << '\n'
        << "mean_orientation_error_deg " << fixed(s.mean_orientation_error_deg) << '\n'
        << "output " << args.out.string() << '\n';
    return kOk;
  });
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto run_path = args.run / "run.csv";
    const auto summary_path = args.run / "summary.json";
    auto rin = open_input(run_path);
    const auto records = read_run_csv(rin, run_path.string());
    auto sin = open_input(summary_path);
    const auto stored = read_summary_json(sin, summary_path.string());
    const auto s = summarize(records);

    auto line = [&](const char* name, double v) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%-30s %14.6f\n", name, v);
      out << buf;
    };
    line("timesteps", s.timesteps);
    line("feasible", s.feasible);
    line("infeasible", s.infeasible);
    line("posed", s.posed);
    line("recalibrations", s.recalibrations);
    line("mean percent error", s.mean_percent_error);
    line("max percent error", s.max_percent_error);
    line("mean corrected percent error", s.mean_corrected_percent_error);
    line("max corrected percent error", s.max_corrected_percent_error);
    line("mean orientation error (deg)", s.mean_orientation_error_deg);
    line("max orientation error (deg)", s.max_orientation_error_deg);
    line("mean cuts per solve", s.mean_cuts);

    const double drift = std::max({std::abs(s.mean_percent_error - stored.mean_percent_error),
                                   std::abs(s.mean_orientation_error_deg -
                                            stored.mean_orientation_error_deg),
                                   std::abs(s.mean_cuts - stored.mean_cuts)});
    if (s.timesteps != stored.timesteps || s.infeasible != stored.infeasible || drift > 1e-12) {
      err << "error: " << summary_path.string() << " disagrees with " << run_path.string() << '\n';
      return kBadInput;
    }
    return kOk;
  });
}

}  // namespace setloc::cli
