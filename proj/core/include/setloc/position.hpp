#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "setloc/calibration.hpp"
#include "setloc/linalg.hpp"
#include "setloc/lp.hpp"

namespace setloc {

struct Beacon {
  int id = 0;
  Vec3 position = Vec3::Zero();
};

/// Beacon positions by id. Throws std::invalid_argument on duplicate ids or
/// non-finite coordinates.
class BeaconRegistry {
 public:
  BeaconRegistry() = default;
  explicit BeaconRegistry(std::span<const Beacon> beacons);

  void add(const Beacon& beacon);
  const Vec3& position(int id) const;
  bool contains(int id) const { return beacons_.count(id) != 0; }
  std::vector<Beacon> beacons() const;
  std::size_t size() const { return beacons_.size(); }

 private:
  std::map<int, Vec3> beacons_;
};

class UnknownBeaconError : public std::out_of_range {
 public:
  explicit UnknownBeaconError(int id);
  int id() const { return id_; }

 private:
  int id_;
};

struct RangeMeasurement {
  int beacon_id = 0;
  int receiver_id = 0;
  double distance = 0.0;
};

struct Ball {
  Vec3 center;
  double radius;
};

/// Intersection of balls; immutable once built.
class BallIntersection {
 public:
  BallIntersection(std::vector<Ball> balls, bool out_of_domain = false);

  const std::vector<Ball>& balls() const { return balls_; }
  std::size_t size() const { return balls_.size(); }
  /// Set when any radius came from a measurement outside phi's domain.
  bool out_of_domain() const { return out_of_domain_; }

  BallIntersection translated(const Vec3& offset) const;
  /// Minimum over balls of radius - |x - center|.
  double margin(const Vec3& x) const;

 private:
  std::vector<Ball> balls_;
  bool out_of_domain_;
};

BallIntersection feasible_set(std::span<const RangeMeasurement> measurements,
                              const BeaconRegistry& beacons, const CalibrationPolynomial& phi);

struct CenterEstimate {
  SolveKind status = SolveKind::IterationLimit;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  int cuts = 0;
  /// Relaxed LP optimum after each solve; non-increasing.
  std::vector<double> relaxed_radii;
};

struct ChebyshevOptions {
  double tol = 1e-7;
  int max_cuts = 500;
  double infeasible_below = -1e-7;
};

/// Chebyshev center by cutting planes on the semi-infinite LP.
CenterEstimate chebyshev_center(const BallIntersection& set, const ChebyshevOptions& options = {});

struct Cut {
  Vec3 direction;
  std::size_t ball;
  double violation;
};

/// Most violated constraint |r - B_i| + l <= rho_i, or nullopt when every
/// violation is <= tol.
std::optional<Cut> separation_cut(const BallIntersection& set, const Vec3& candidate,
                                  double radius, double tol = 1e-7);

struct EllipsoidEstimate {
  SolveKind status = SolveKind::IterationLimit;
  Vec3 center = Vec3::Zero();
  Mat3 shape = Mat3::Zero();
  double log_det = 0.0;
  Eigen::VectorXd multipliers;
  double gap = 0.0;
};

struct MveOptions {
  double tol = 1e-7;
};

/// Center of the maximum-volume ellipsoid {P u + c : |u| <= 1} inside the
/// intersection, from the per-ball 7x7 S-lemma LMIs.
EllipsoidEstimate mve_center(const BallIntersection& set, const MveOptions& options = {});

/// The 7x7 matrix
///   [ rho - lambda   (c - B)^T   0      ]
///   [ c - B          rho I       P      ]
///   [ 0              P           lambda I ]
/// which is PSD iff the ellipsoid (P, c) fits inside ball (B, rho).
Eigen::Matrix<double, 7, 7> containment_block(const Mat3& shape, const Vec3& offset, double radius,
                                              double lambda);

/// sup over |u| <= 1 of |P u + v|.
double sup_norm_over_ball(const Mat3& p, const Vec3& v);

}  // namespace setloc
