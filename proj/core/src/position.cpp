#include "setloc/position.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "setloc/maxdet.hpp"

namespace setloc {

BeaconRegistry::BeaconRegistry(std::span<const Beacon> beacons) {
  for (const auto& b : beacons) add(b);
}

void BeaconRegistry::add(const Beacon& beacon) {
  if (!beacon.position.allFinite()) {
    throw std::invalid_argument("beacon " + std::to_string(beacon.id) +
                                " has non-finite coordinates");
  }
  if (!beacons_.emplace(beacon.id, beacon.position).second) {
    throw std::invalid_argument("duplicate beacon id " + std::to_string(beacon.id));
  }
}

const Vec3& BeaconRegistry::position(int id) const {
  const auto it = beacons_.find(id);
  if (it == beacons_.end()) throw UnknownBeaconError(id);
  return it->second;
}

std::vector<Beacon> BeaconRegistry::beacons() const {
  std::vector<Beacon> out;
  out.reserve(beacons_.size());
  for (const auto& [id, p] : beacons_) out.push_back(Beacon{id, p});
  return out;
}

UnknownBeaconError::UnknownBeaconError(int id)
    : std::out_of_range("unknown beacon id " + std::to_string(id)), id_(id) {}

BallIntersection::BallIntersection(std::vector<Ball> balls, bool out_of_domain)
    : balls_(std::move(balls)), out_of_domain_(out_of_domain) {
  if (balls_.empty()) throw std::invalid_argument("BallIntersection: no balls");
  for (const auto& b : balls_) {
    if (!b.center.allFinite() || !std::isfinite(b.radius)) {
      throw std::invalid_argument("BallIntersection: non-finite ball");
    }
    if (!(b.radius > 0.0)) throw std::domain_error("BallIntersection: non-positive radius");
  }
}

BallIntersection BallIntersection::translated(const Vec3& offset) const {
  std::vector<Ball> moved = balls_;
  for (auto& b : moved) b.center += offset;
  return BallIntersection(std::move(moved), out_of_domain_);
}

double BallIntersection::margin(const Vec3& x) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : balls_) m = std::min(m, b.radius - (x - b.center).norm());
  return m;
}

BallIntersection feasible_set(std::span<const RangeMeasurement> measurements,
                              const BeaconRegistry& beacons, const CalibrationPolynomial& phi) {
  if (measurements.empty()) throw std::invalid_argument("feasible_set: no measurements");
  std::vector<Ball> balls;
  balls.reserve(measurements.size());
  bool out_of_domain = false;
  for (const auto& m : measurements) {
    const PhiValue r = eval_phi(phi, m.distance);
    out_of_domain = out_of_domain || r.out_of_domain;
    balls.push_back(Ball{beacons.position(m.beacon_id), r.radius});
  }
  return BallIntersection(std::move(balls), out_of_domain);
}

namespace {

Vec3 centroid(const BallIntersection& set) {
  Vec3 c = Vec3::Zero();
  for (const auto& b : set.balls()) c += b.center;
  return c / static_cast<double>(set.size());
}

}  // namespace

std::optional<Cut> separation_cut(const BallIntersection& set, const Vec3& candidate,
                                  double radius, double tol) {
  std::optional<Cut> worst;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Ball& b = set.balls()[i];
    const Vec3 delta = candidate - b.center;
    const double dist = delta.norm();
    const double violation = dist + radius - b.radius;
    if (violation <= tol) continue;
    if (worst && violation <= worst->violation) continue;
    // At the center itself every unit vector separates; pick +x.
    const Vec3 dir = dist > 0.0 ? Vec3(delta / dist) : Vec3::UnitX();
    worst = Cut{dir, i, violation};
  }
  return worst;
}

CenterEstimate chebyshev_center(const BallIntersection& input, const ChebyshevOptions& options) {
  const Vec3 origin = centroid(input);
  const BallIntersection set = input.translated(-origin);

  LinearProgram lp(Eigen::Vector4d(0.0, 0.0, 0.0, 1.0));
  auto add_cut = [&](const Vec3& v, const Ball& b) {
    lp.add_constraint(Eigen::Vector4d(v.x(), v.y(), v.z(), 1.0), v.dot(b.center) + b.radius);
  };
  std::vector<Vec3> directions;
  for (int axis = 0; axis < 3; ++axis) {
    directions.push_back(Vec3::Unit(axis));
    directions.push_back(-Vec3::Unit(axis));
  }
  for (const auto& b : set.balls()) {
    const double n = b.center.norm();
    if (n > 1e-12) directions.push_back(b.center / n);
  }
  for (const auto& v : directions) {
    for (const auto& b : set.balls()) add_cut(v, b);
  }

  CenterEstimate out;
  while (true) {
    const LpResult sol = solve_lp(lp);
    if (!sol.status.optimal()) {
      out.status = sol.status.kind;
      break;
    }
    const Vec3 r = sol.x.head<3>();
    const double l = sol.x(3);
    out.center = r + origin;
    out.radius = l;
    out.relaxed_radii.push_back(l);
    if (l < options.infeasible_below) {
      out.status = SolveKind::Infeasible;
      break;
    }
    const auto cut = separation_cut(set, r, l, options.tol);
    if (!cut) {
      out.status = SolveKind::Optimal;
      break;
    }
    if (out.cuts >= options.max_cuts) {
      out.status = SolveKind::IterationLimit;
      break;
    }
    add_cut(cut->direction, set.balls()[cut->ball]);
    ++out.cuts;
  }
  return out;
}

Eigen::Matrix<double, 7, 7> containment_block(const Mat3& shape, const Vec3& offset, double radius,
                                              double lambda) {
  Eigen::Matrix<double, 7, 7> m = Eigen::Matrix<double, 7, 7>::Zero();
  m(0, 0) = radius - lambda;
  m.block<1, 3>(0, 1) = offset.transpose();
  m.block<3, 1>(1, 0) = offset;
  m.block<3, 3>(1, 1) = radius * Mat3::Identity();
  m.block<3, 3>(1, 4) = shape;
  m.block<3, 3>(4, 1) = shape.transpose();
  m.block<3, 3>(4, 4) = lambda * Mat3::Identity();
  return m;
}

namespace {

constexpr Eigen::Index kShapeVars = 6;
constexpr Eigen::Index kCenterVar = 6;
constexpr Eigen::Index kLambdaVar = 9;

Eigen::Index shape_var(Eigen::Index a, Eigen::Index b) {
  return SosDerivativeSystem::svec_index(a, b, 3);
}

// Maximizes the smallest eigenvalue of the containment block over lambda.
// The objective is concave in lambda, so golden-section search suffices.
std::pair<double, double> best_multiplier(const Mat3& shape, const Vec3& offset, double radius,
                                          double hi) {
  auto score = [&](double lambda) {
    return min_eigenvalue(containment_block(shape, offset, radius, lambda));
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0;
  double b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = score(c);
  double fd = score(d);
  for (int it = 0; it < 100 && b - a > 1e-14 * std::max(1.0, hi); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = score(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = score(d);
    }
  }
  const double lambda = 0.5 * (a + b);
  return {lambda, score(lambda)};
}

// Interior point by gradient descent on sum max(0, |c - B_i| - rho_i + tau)^2
// with a shrinking margin target tau.
std::optional<Vec3> interior_point(const BallIntersection& set) {
  double min_radius = std::numeric_limits<double>::infinity();
  Vec3 c = Vec3::Zero();
  double wsum = 0.0;
  for (const auto& b : set.balls()) {
    min_radius = std::min(min_radius, b.radius);
    c += b.center / b.radius;
    wsum += 1.0 / b.radius;
  }
  c /= wsum;
  for (double frac : {0.25, 0.1, 0.03, 0.01, 1e-3, 1e-4}) {
    const double tau = frac * min_radius;
    for (int it = 0; it < 400; ++it) {
      Vec3 grad = Vec3::Zero();
      int active = 0;
      for (const auto& b : set.balls()) {
        const Vec3 delta = c - b.center;
        const double dist = delta.norm();
        const double excess = dist - b.radius + tau;
        if (excess > 0.0 && dist > 0.0) {
          grad += 2.0 * excess * delta / dist;
          ++active;
        }
      }
      if (active == 0) return c;
      c -= grad / (2.0 * active);
    }
  }
  if (set.margin(c) > 0.0) return c;
  return std::nullopt;
}

}  // namespace

EllipsoidEstimate mve_center(const BallIntersection& input, const MveOptions& options) {
  const Vec3 origin = centroid(input);
  const BallIntersection set = input.translated(-origin);
  const auto nballs = static_cast<Eigen::Index>(set.size());
  const Eigen::Index nvar = kLambdaVar + nballs;

  MaxDetProblem problem(nvar);
  AffineSymMap det(3, nvar);
  for (Eigen::Index a = 0; a < 3; ++a) {
    for (Eigen::Index b = a; b < 3; ++b) det.add_entry(shape_var(a, b), a, b, 1.0);
  }
  problem.det_block = det;

  for (Eigen::Index i = 0; i < nballs; ++i) {
    const Ball& ball = set.balls()[static_cast<std::size_t>(i)];
    AffineSymMap block(7, nvar);
    block.add_constant_entry(0, 0, ball.radius);
    for (Eigen::Index k = 0; k < 3; ++k) {
      block.add_constant_entry(1 + k, 1 + k, ball.radius);
      block.add_constant_entry(0, 1 + k, -ball.center(k));
      block.add_entry(kCenterVar + k, 0, 1 + k, 1.0);
      block.add_entry(kLambdaVar + i, 4 + k, 4 + k, 1.0);
    }
    block.add_entry(kLambdaVar + i, 0, 0, -1.0);
    for (Eigen::Index a = 0; a < 3; ++a) {
      for (Eigen::Index b = a; b < 3; ++b) {
        block.add_entry(shape_var(a, b), 1 + a, 4 + b, 1.0);
        if (a != b) block.add_entry(shape_var(a, b), 1 + b, 4 + a, 1.0);
      }
    }
    problem.lmi_blocks.push_back(std::move(block));
  }

  if (const auto c0 = interior_point(set)) {
    double min_radius = std::numeric_limits<double>::infinity();
    for (const auto& b : set.balls()) min_radius = std::min(min_radius, b.radius);
    const double eps = std::min(1e-4 * min_radius, 0.5 * set.margin(*c0));
    const Mat3 shape = eps * Mat3::Identity();
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(nvar);
    for (Eigen::Index a = 0; a < 3; ++a) x0(shape_var(a, a)) = eps;
    x0.segment<3>(kCenterVar) = *c0;
    bool ok = true;
    for (Eigen::Index i = 0; i < nballs && ok; ++i) {
      const Ball& ball = set.balls()[static_cast<std::size_t>(i)];
      const auto [lambda, score] = best_multiplier(shape, *c0 - ball.center, ball.radius,
                                                   ball.radius);
      x0(kLambdaVar + i) = lambda;
      ok = score > 0.0;
    }
    if (ok) problem.start = x0;
  }

  MaxDetOptions opts;
  opts.gap_tol = options.tol;
  const MaxDetResult solved = solve_maxdet(problem, opts);

  EllipsoidEstimate out;
  out.status = solved.status.kind;
  out.gap = solved.gap;
  for (Eigen::Index a = 0; a < 3; ++a) {
    for (Eigen::Index b = 0; b < 3; ++b) out.shape(a, b) = solved.x(shape_var(a, b));
  }
  out.center = solved.x.segment<3>(kCenterVar) + origin;
  out.multipliers = solved.x.tail(nballs);
  const Eigen::LLT<Mat3> llt(out.shape);
  if (llt.info() == Eigen::Success) {
    const Mat3 l = llt.matrixL();
    out.log_det = 2.0 * l.diagonal().array().log().sum();
  } else {
    out.log_det = -std::numeric_limits<double>::infinity();
  }
  return out;
}

double sup_norm_over_ball(const Mat3& p, const Vec3& v) {
  const SymEig eig = sym_eig(p);
  // In P's eigenbasis the squared norm is sum alpha_i w_i^2 + 2 beta_i w_i + |v|^2.
  Eigen::Vector3d alpha = eig.values.array().square();
  Eigen::Vector3d beta = eig.values.cwiseProduct(eig.vectors.transpose() * v);
  const double amax = alpha.maxCoeff();
  const double scale = std::max({1.0, amax, beta.cwiseAbs().maxCoeff()});
  const double tie = 1e-12 * scale;

  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  double gamma = amax;
  bool hard = true;
  double rest = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (amax - alpha(i) <= tie) {
      if (std::abs(beta(i)) > tie) hard = false;
    } else {
      const double wi = beta(i) / (amax - alpha(i));
      rest += wi * wi;
    }
  }
  if (hard && rest <= 1.0) {
    // Optimum sits on the top eigenspace; fill the remaining unit norm there.
    int top = 0;
    for (int i = 0; i < 3; ++i) {
      if (amax - alpha(i) <= tie) {
        top = i;
      } else {
        w(i) = beta(i) / (amax - alpha(i));
      }
    }
    w(top) = std::sqrt(std::max(0.0, 1.0 - rest));
  } else {
    auto secular = [&](double g) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double d = g - alpha(i);
        s += beta(i) * beta(i) / (d * d);
      }
      return s;
    };
    double lo = amax;
    double hi = amax + beta.norm() + tie;
    for (int it = 0; it < 300; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (secular(mid) > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    gamma = hi;
    for (int i = 0; i < 3; ++i) w(i) = beta(i) / (gamma - alpha(i));
    w.normalize();
  }
  const double value = w.dot(alpha.cwiseProduct(w)) + 2.0 * beta.dot(w) + v.squaredNorm();
  return std::sqrt(std::max(0.0, value));
}

}  // namespace setloc
