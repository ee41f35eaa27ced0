#include "setloc/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "json.hpp"

namespace setloc {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + what);
}

double to_double(const std::string& s, const std::string& source, int line) {
  if (s.empty()) fail(source, line, "empty field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    fail(source, line, "not a finite number: '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& source, int line) {
  if (s.empty()) fail(source, line, "empty field");
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE || v < INT32_MIN || v > INT32_MAX)
    fail(source, line, "not an integer: '" + s + "'");
  return static_cast<int>(v);
}

/// Calls `row(fields, line)` for each data line after checking the header.
template <typename F>
void read_csv(std::istream& in, const std::string& source, const std::vector<std::string>& header,
              F&& row) {
  std::string text;
  int line = 0;
  bool seen_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    auto fields = split(text);
    if (!seen_header) {
      seen_header = true;
      if (fields == header) continue;
      bool numeric = true;
      char* end = nullptr;
      std::strtod(fields.front().c_str(), &end);
      if (fields.front().empty() || *end != '\0') numeric = false;
      if (!numeric) fail(source, line, "unexpected header");
    }
    if (fields.size() != header.size())
      fail(source, line,
           "expected " + std::to_string(header.size()) + " fields, got " +
               std::to_string(fields.size()));
    row(fields, line);
  }
  if (in.bad()) throw ParseError(source + ": read error");
}

template <typename T>
T json_get(const json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) throw ParseError(source + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(source + ": field '" + key + "': " + e.what());
  }
}

Vec3 json_vec3(const json& j, const std::string& source, const std::string& what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number())
    throw ParseError(source + ": " + what + " must be an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json parse_json(std::istream& in, const std::string& source) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

CalibrationPolynomial polynomial_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw ParseError(source + ": polynomial must be a JSON object");
  const auto degree = json_get<int>(j, "degree", source);
  const auto coeffs = json_get<std::vector<double>>(j, "coefficients", source);
  const auto domain = json_get<std::vector<double>>(j, "domain", source);
  if (degree < 1) throw ParseError(source + ": degree must be >= 1");
  if (static_cast<int>(coeffs.size()) != degree + 1)
    throw ParseError(source + ": expected " + std::to_string(degree + 1) + " coefficients, got " +
                     std::to_string(coeffs.size()));
  if (domain.size() != 2) throw ParseError(source + ": domain must have 2 entries");
  Eigen::VectorXd a(degree + 1);
  for (int i = 0; i <= degree; ++i) a(i) = coeffs[i];
  try {
    return CalibrationPolynomial(a, domain[0], domain[1]);
  } catch (const std::invalid_argument& e) {
    throw ParseError(source + ": " + e.what());
  }
}

json polynomial_to_json(const CalibrationPolynomial& phi) {
  json coeffs = json::array();
  for (Eigen::Index i = 0; i < phi.coefficients().size(); ++i) coeffs.push_back(phi.coefficients()(i));
  return {{"degree", phi.degree()},
          {"coefficients", coeffs},
          {"domain", {phi.domain_lower(), phi.domain_upper()}}};
}

// Floats go through format_double so every output file shares one format.
void dump(std::ostream& out, const json& j, int indent = 0);

void dump_value(std::ostream& out, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  if (j.is_number_float()) {
    out << format_double(j.get<double>());
  } else if (j.is_object()) {
    if (j.empty()) {
      out << "{}";
      return;
    }
    out << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out << ",\n";
      first = false;
      out << pad << json(it.key()).dump() << ": ";
      dump_value(out, it.value(), indent + 2);
    }
    out << "\n" << close << "}";
  } else if (j.is_array()) {
    bool flat = true;
    for (const auto& v : j) flat = flat && v.is_primitive();
    out << "[";
    bool first = true;
    for (const auto& v : j) {
      if (!first) out << (flat ? ", " : ",");
      if (!flat) out << "\n" << pad;
      first = false;
      dump_value(out, v, indent + 2);
    }
    if (!flat && !j.empty()) out << "\n" << close;
    out << "]";
  } else {
    out << j.dump();
  }
}

void dump(std::ostream& out, const json& j, int indent) {
  dump_value(out, j, indent);
  out << "\n";
}

template <typename W>
void write_file(const std::filesystem::path& path, W&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  writer(out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

SolveKind parse_solve_kind(std::string_view s) {
  for (auto k : {SolveKind::Optimal, SolveKind::Infeasible, SolveKind::Unbounded,
                 SolveKind::IterationLimit}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown status '" + std::string(s) + "'");
}

CalibrationDataset read_calibration_csv(std::istream& in, const std::string& source) {
  CalibrationDataset data;
  read_csv(in, source, {"d_true", "D_low", "D_high"}, [&](const auto& f, int line) {
    const CalibrationSample s{to_double(f[0], source, line), to_double(f[1], source, line),
                              to_double(f[2], source, line)};
    try {
      data.add(s);
    } catch (const std::invalid_argument& e) {
      fail(source, line, e.what());
    }
  });
  return data;
}

void write_calibration_csv(std::ostream& out, const CalibrationDataset& data) {
  out << "d_true,D_low,D_high\n";
  for (const auto& s : data.samples()) {
    out << format_double(s.true_distance) << ',' << format_double(s.measured_low) << ','
        << format_double(s.measured_high) << '\n';
  }
}

CalibrationPolynomial read_polynomial_json(std::istream& in, const std::string& source) {
  return polynomial_from_json(parse_json(in, source), source);
}

void write_polynomial_json(std::ostream& out, const CalibrationPolynomial& phi) {
  dump(out, polynomial_to_json(phi));
}

std::vector<TimedMeasurement> read_measurements_csv(std::istream& in, const std::string& source) {
  std::vector<TimedMeasurement> rows;
  read_csv(in, source, {"t", "receiver_id", "beacon_id", "D"}, [&](const auto& f, int line) {
    TimedMeasurement m;
    m.t = to_double(f[0], source, line);
    m.range.receiver_id = to_int(f[1], source, line);
    m.range.beacon_id = to_int(f[2], source, line);
    m.range.distance = to_double(f[3], source, line);
    if (m.range.receiver_id < 0) fail(source, line, "receiver_id must be >= 0");
    rows.push_back(m);
  });
  return rows;
}

void write_measurements_csv(std::ostream& out, const std::vector<TimedMeasurement>& rows) {
  out << "t,receiver_id,beacon_id,D\n";
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << r.range.receiver_id << ',' << r.range.beacon_id << ','
        << format_double(r.range.distance) << '\n';
  }
}

std::vector<Beacon> read_beacons_csv(std::istream& in, const std::string& source) {
  std::vector<Beacon> out;
  read_csv(in, source, {"id", "x", "y", "z"}, [&](const auto& f, int line) {
    out.push_back({to_int(f[0], source, line),
                   Vec3(to_double(f[1], source, line), to_double(f[2], source, line),
                        to_double(f[3], source, line))});
  });
  return out;
}

void write_beacons_csv(std::ostream& out, const std::vector<Beacon>& beacons) {
  out << "id,x,y,z\n";
  for (const auto& b : beacons) {
    out << b.id << ',' << format_double(b.position.x()) << ',' << format_double(b.position.y())
        << ',' << format_double(b.position.z()) << '\n';
  }
}

void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows) {
  out << "t,receiver_id,method,x,y,z,l_or_logdet,cuts,status\n";
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << r.receiver_id << ',' << to_string(r.method) << ','
        << format_double(r.position.x()) << ',' << format_double(r.position.y()) << ','
        << format_double(r.position.z()) << ',' << format_double(r.score) << ',' << r.cuts << ','
        << to_string(r.status) << '\n';
  }
}

void write_pose_csv(std::ostream& out, const std::vector<PoseRow>& rows) {
  out << "t,qw,qx,qy,qz,x0,y0,z0,residual\n";
  for (const auto& r : rows) {
    const auto q = to_quaternion(r.pose.rotation);
    out << format_double(r.t) << ',' << format_double(q.w()) << ',' << format_double(q.x()) << ','
        << format_double(q.y()) << ',' << format_double(q.z()) << ','
        << format_double(r.pose.origin.x()) << ',' << format_double(r.pose.origin.y()) << ','
        << format_double(r.pose.origin.z()) << ',' << format_double(r.residual) << '\n';
  }
}

Scenario read_scenario_json(std::istream& in, const std::string& source) {
  const json j = parse_json(in, source);
  if (!j.is_object()) throw ParseError(source + ": scenario must be a JSON object");
  Scenario s = Scenario::reference();
  try {
    if (j.contains("beacons")) {
      s.beacons.clear();
      for (const auto& b : j.at("beacons")) {
        s.beacons.push_back({json_get<int>(b, "id", source),
                             json_vec3(b.at("position"), source, "beacon position")});
      }
    }
    if (j.contains("layout")) {
      std::vector<Vec3> points;
      for (const auto& p : j.at("layout")) points.push_back(json_vec3(p, source, "layout point"));
      s.layout = ReceiverLayout(points);
    }
    if (j.contains("timesteps")) s.timesteps = json_get<int>(j, "timesteps", source);
    if (j.contains("t_begin")) s.t_begin = json_get<double>(j, "t_begin", source);
    if (j.contains("t_end")) s.t_end = json_get<double>(j, "t_end", source);
    if (j.contains("noise_std")) s.noise_std = json_get<double>(j, "noise_std", source);
    if (j.contains("seed")) s.seed = json_get<std::uint64_t>(j, "seed", source);
    if (j.contains("tol")) s.tol = json_get<double>(j, "tol", source);
    if (j.contains("estimator"))
      s.estimator = parse_estimator(json_get<std::string>(j, "estimator", source));
    if (j.contains("policy"))
      s.policy = parse_policy(json_get<std::string>(j, "policy", source));
    if (j.contains("calibration")) {
      const auto& c = j.at("calibration");
      auto& p = s.calibration;
      if (c.contains("degree")) p.degree = json_get<int>(c, "degree", source);
      if (c.contains("range_lower")) p.range_lower = json_get<double>(c, "range_lower", source);
      if (c.contains("range_upper")) p.range_upper = json_get<double>(c, "range_upper", source);
      if (c.contains("true_values")) p.true_values = json_get<int>(c, "true_values", source);
      if (c.contains("readings_per_value"))
        p.readings_per_value = json_get<int>(c, "readings_per_value", source);
      if (c.contains("epsilon")) p.epsilon = json_get<double>(c, "epsilon", source);
      if (c.contains("random_true_values"))
        p.random_true_values = json_get<bool>(c, "random_true_values", source);
    }
    if (j.contains("phi")) s.phi = polynomial_from_json(j.at("phi"), source);
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(source + ": " + e.what());
  }
  return s;
}

void write_scenario_json(std::ostream& out, const Scenario& s) {
  json beacons = json::array();
  for (const auto& b : s.beacons)
    beacons.push_back({{"id", b.id}, {"position", {b.position.x(), b.position.y(), b.position.z()}}});
  json layout = json::array();
  for (const auto& p : s.layout.points()) layout.push_back({p.x(), p.y(), p.z()});
  const auto& c = s.calibration;
  json j = {{"beacons", beacons},
            {"layout", layout},
            {"timesteps", s.timesteps},
            {"t_begin", s.t_begin},
            {"t_end", s.t_end},
            {"noise_std", s.noise_std},
            {"seed", s.seed},
            {"tol", s.tol},
            {"estimator", std::string(to_string(s.estimator))},
            {"policy", std::string(to_string(s.policy))},
            {"calibration",
             {{"degree", c.degree},
              {"range_lower", c.range_lower},
              {"range_upper", c.range_upper},
              {"true_values", c.true_values},
              {"readings_per_value", c.readings_per_value},
              {"epsilon", c.epsilon},
              {"random_true_values", c.random_true_values}}}};
  if (s.phi) j["phi"] = polynomial_to_json(*s.phi);
  dump(out, j);
}

void write_run_csv(std::ostream& out, const RunReport& report) {
  out << "index,t,status,pose_status,true_x,true_y,true_z,est_x,est_y,est_z,corr_x,corr_y,corr_z,"
         "max_range,percent_error,corrected_percent_error,orientation_error_deg,residual,cuts,"
         "solves,out_of_domain,recalibrated,contains_truth\n";
  for (const auto& r : report.records) {
    out << r.index << ',' << format_double(r.t) << ',' << to_string(r.status) << ','
        << to_string(r.pose_status);
    for (const Vec3* v : {&r.true_center, &r.estimated_center, &r.corrected_center})
      for (int a = 0; a < 3; ++a) out << ',' << format_double((*v)(a));
    out << ',' << format_double(r.max_range) << ',' << format_double(r.percent_error) << ','
        << format_double(r.corrected_percent_error) << ','
        << format_double(r.orientation_error_deg) << ',' << format_double(r.residual) << ','
        << r.cuts << ',' << r.solves << ',' << int(r.out_of_domain) << ',' << int(r.recalibrated)
        << ',' << int(r.contains_truth) << '\n';
  }
}

namespace {

const std::vector<std::string> kRunHeader = {
    "index", "t", "status", "pose_status", "true_x", "true_y", "true_z", "est_x", "est_y",
    "est_z", "corr_x", "corr_y", "corr_z", "max_range", "percent_error",
    "corrected_percent_error", "orientation_error_deg", "residual", "cuts", "solves",
    "out_of_domain", "recalibrated", "contains_truth"};

}  // namespace

std::vector<TimestepRecord> read_run_csv(std::istream& in, const std::string& source) {
  std::vector<TimestepRecord> out;
  read_csv(in, source, kRunHeader, [&](const auto& f, int line) {
    auto num = [&](int i) { return to_double(f[i], source, line); };
    auto flag = [&](int i) {
      const int v = to_int(f[i], source, line);
      if (v != 0 && v != 1) fail(source, line, "flag must be 0 or 1");
      return v == 1;
    };
    auto kind = [&](int i) {
      try {
        return parse_solve_kind(f[i]);
      } catch (const std::invalid_argument& e) {
        fail(source, line, e.what());
      }
    };
    TimestepRecord r;
    r.index = to_int(f[0], source, line);
    r.t = num(1);
    r.status = kind(2);
    r.pose_status = kind(3);
    r.true_center = Vec3(num(4), num(5), num(6));
    r.estimated_center = Vec3(num(7), num(8), num(9));
    r.corrected_center = Vec3(num(10), num(11), num(12));
    r.max_range = num(13);
    r.percent_error = num(14);
    r.corrected_percent_error = num(15);
    r.orientation_error_deg = num(16);
    r.residual = num(17);
    r.cuts = to_int(f[18], source, line);
    r.solves = to_int(f[19], source, line);
    r.out_of_domain = flag(20);
    r.recalibrated = flag(21);
    r.contains_truth = flag(22);
    out.push_back(std::move(r));
  });
  return out;
}

RunSummary read_summary_json(std::istream& in, const std::string& source) {
  const json j = parse_json(in, source);
  if (!j.is_object()) throw ParseError(source + ": summary must be a JSON object");
  RunSummary s;
  s.timesteps = json_get<int>(j, "timesteps", source);
  s.feasible = json_get<int>(j, "feasible", source);
  s.infeasible = json_get<int>(j, "infeasible", source);
  s.posed = json_get<int>(j, "posed", source);
  s.recalibrations = json_get<int>(j, "recalibrations", source);
  s.mean_percent_error = json_get<double>(j, "mean_percent_error", source);
  s.max_percent_error = json_get<double>(j, "max_percent_error", source);
  s.mean_corrected_percent_error = json_get<double>(j, "mean_corrected_percent_error", source);
  s.max_corrected_percent_error = json_get<double>(j, "max_corrected_percent_error", source);
  s.mean_orientation_error_deg = json_get<double>(j, "mean_orientation_error_deg", source);
  s.max_orientation_error_deg = json_get<double>(j, "max_orientation_error_deg", source);
  s.mean_cuts = json_get<double>(j, "mean_cuts", source);
  return s;
}

void write_summary_json(std::ostream& out, const RunReport& report) {
  const auto& s = report.summary;
  json j = {{"timesteps", s.timesteps},
            {"feasible", s.feasible},
            {"infeasible", s.infeasible},
            {"posed", s.posed},
            {"recalibrations", s.recalibrations},
            {"mean_percent_error", s.mean_percent_error},
            {"max_percent_error", s.max_percent_error},
            {"mean_corrected_percent_error", s.mean_corrected_percent_error},
            {"max_corrected_percent_error", s.max_corrected_percent_error},
            {"mean_orientation_error_deg", s.mean_orientation_error_deg},
            {"max_orientation_error_deg", s.max_orientation_error_deg},
            {"mean_cuts", s.mean_cuts},
            {"initial_phi", polynomial_to_json(report.initial_phi)},
            {"final_phi", polynomial_to_json(report.final_phi)}};
  dump(out, j);
}

void write_trajectory_plot_csv(std::ostream& out, const RunReport& report) {
  out << "t,true_x,true_y,true_z,est_x,est_y,est_z,feasible\n";
  for (const auto& r : report.records) {
    const bool ok = r.status == SolveKind::Optimal;
    out << format_double(r.t);
    for (int a = 0; a < 3; ++a) out << ',' << format_double(r.true_center(a));
    for (int a = 0; a < 3; ++a) out << ',' << (ok ? format_double(r.estimated_center(a)) : "nan");
    out << ',' << int(ok) << '\n';
  }
}

void write_error_plot_csv(std::ostream& out, const RunReport& report) {
  out << "index,percent_error,orientation_error_deg\n";
  for (const auto& r : report.records) {
    const bool ok = r.status == SolveKind::Optimal;
    const bool posed = r.pose_status == SolveKind::Optimal;
    out << r.index + 1 << ',' << (ok ? format_double(r.percent_error) : "nan") << ','
        << (posed ? format_double(r.orientation_error_deg) : "nan") << '\n';
  }
}

void write_phi_plot_csv(std::ostream& out, const CalibrationDataset& data,
                        const CalibrationPolynomial& phi, int points) {
  out << "kind,x,y,y2\n";
  for (const auto& s : data.samples()) {
    out << "sample," << format_double(s.true_distance) << ',' << format_double(s.measured_low)
        << ',' << format_double(s.measured_high) << '\n';
  }
  const double lo = phi.domain_lower();
  const double hi = phi.domain_upper();
  for (int i = 0; i < points; ++i) {
    const double x = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    out << "phi," << format_double(x) << ',' << format_double(phi(x)) << ','
        << format_double(phi.derivative(x)) << '\n';
  }
}

void write_run_directory(const std::filesystem::path& dir, const Scenario& scenario,
                         const RunReport& report) {
  std::filesystem::create_directories(dir);
  write_file(dir / "scenario.json", [&](std::ostream& o) { write_scenario_json(o, scenario); });
  write_file(dir / "run.csv", [&](std::ostream& o) { write_run_csv(o, report); });
  write_file(dir / "summary.json", [&](std::ostream& o) { write_summary_json(o, report); });
  write_file(dir / "phi_initial.json",
             [&](std::ostream& o) { write_polynomial_json(o, report.initial_phi); });
  write_file(dir / "phi_final.json",
             [&](std::ostream& o) { write_polynomial_json(o, report.final_phi); });
  write_file(dir / "plot_trajectory.csv",
             [&](std::ostream& o) { write_trajectory_plot_csv(o, report); });
  write_file(dir / "plot_error.csv", [&](std::ostream& o) { write_error_plot_csv(o, report); });
  if (!report.calibration.empty()) {
    write_file(dir / "calibration.csv",
               [&](std::ostream& o) { write_calibration_csv(o, report.calibration); });
    write_file(dir / "plot_phi.csv", [&](std::ostream& o) {
      write_phi_plot_csv(o, report.calibration, report.final_phi);
    });
  }

  std::vector<TimedMeasurement> measurements;
  std::vector<EstimateRow> estimates;
  std::vector<PoseRow> poses;
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    const auto& r = report.records[k];
    for (const auto& m : report.measurements[k]) measurements.push_back({r.t, m});
    for (std::size_t j = 0; j < r.receiver_estimates.size(); ++j) {
      estimates.push_back({r.t, static_cast<int>(j), scenario.estimator, r.receiver_estimates[j],
                           r.receiver_scores[j], r.receiver_cuts[j], r.receiver_status[j]});
    }
    if (r.pose_status == SolveKind::Optimal)
      poses.push_back({r.t, {r.estimated_rotation, r.corrected_center}, r.residual});
  }
  write_file(dir / "measurements.csv",
             [&](std::ostream& o) { write_measurements_csv(o, measurements); });
  write_file(dir / "estimates.csv", [&](std::ostream& o) { write_estimates_csv(o, estimates); });
  write_file(dir / "poses.csv", [&](std::ostream& o) { write_pose_csv(o, poses); });
}

}  // namespace setloc
