#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "setloc/linalg.hpp"

namespace setloc {

/// Receiver coordinates w_j in the body frame.
class ReceiverLayout {
 public:
  /// Requires at least 3 non-collinear points; throws std::invalid_argument.
  explicit ReceiverLayout(std::vector<Vec3> points);

  /// Receiver 0 at the body origin and receivers 1..3 on the unit axes.
  static ReceiverLayout unit_axes();

  const std::vector<Vec3>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  Vec3 centroid() const;
  /// True when the centered layout has rank 3 (proper rotation is unique).
  bool full_rank() const;

 private:
  std::vector<Vec3> points_;
};

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();
};

/// Throws std::invalid_argument unless R^T R = I and det R = 1 within `tol`.
void check_rotation(const Mat3& r, double tol = 1e-9);

struct PoseFit {
  Pose pose;
  /// trace(E^T E) of the rigid-body error matrix.
  double residual = 0.0;
  Vec3 singular_values = Vec3::Zero();
  /// det(V U^T) was -1 and the smallest singular direction was flipped.
  bool reflection_corrected = false;
  /// rank(W) <= 1; part of the rotation came from the reference.
  bool degenerate = false;
};

/// Least-squares rigid fit of `estimates` to the layout:
/// R = V diag(1, 1, det(V U^T)) U^T with W = sum_j w~_j r~_j^T = U S V^T,
/// r0 = r_bar - R w_bar. A rank-deficient W takes the undetermined part of R
/// from `reference`.
PoseFit procrustes(const ReceiverLayout& layout, std::span<const Vec3> estimates,
                   const Mat3& reference = Mat3::Identity());

/// r0 + R w_j for every receiver.
std::vector<Vec3> corrected_positions(const PoseFit& fit, const ReceiverLayout& layout);

/// Rotation angle of R1^T R2 in radians, in [0, pi]. The Frobenius norm of
/// the matrix logarithm equals sqrt(2) times this value.
double geodesic_distance(const Mat3& r1, const Mat3& r2);

/// Unit quaternion with w >= 0.
Eigen::Quaterniond to_quaternion(const Mat3& r);
Mat3 from_quaternion(const Eigen::Quaterniond& q);

}  // namespace setloc
