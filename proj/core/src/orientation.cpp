#include "setloc/orientation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace setloc {

ReceiverLayout::ReceiverLayout(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() < 3) throw std::invalid_argument("ReceiverLayout: need at least 3 receivers");
  for (const auto& p : points_) {
    if (!p.allFinite()) throw std::invalid_argument("ReceiverLayout: non-finite coordinate");
  }
  const Vec3 c = centroid();
  Mat3 scatter = Mat3::Zero();
  double scale = 0.0;
  for (const auto& p : points_) {
    scatter += (p - c) * (p - c).transpose();
    scale = std::max(scale, (p - c).squaredNorm());
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  if (es.eigenvalues()(1) <= 1e-12 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("ReceiverLayout: receivers are collinear");
  }
}

ReceiverLayout ReceiverLayout::unit_axes() {
  return ReceiverLayout({Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()});
}

Vec3 ReceiverLayout::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& p : points_) c += p;
  return c / static_cast<double>(points_.size());
}

bool ReceiverLayout::full_rank() const {
  const Vec3 c = centroid();
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points_) scatter += (p - c) * (p - c).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  return es.eigenvalues()(0) > 1e-12 * std::max(es.eigenvalues()(2), 1e-300);
}

void check_rotation(const Mat3& r, double tol) {
  if (!r.allFinite() || (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol ||
      std::abs(r.determinant() - 1.0) > tol) {
    throw std::invalid_argument("matrix is not a proper rotation");
  }
}

namespace {

// Smallest rotation taking unit vector a onto unit vector b.
Mat3 align(const Vec3& a, const Vec3& b) {
  return Eigen::Quaterniond::FromTwoVectors(a, b).toRotationMatrix();
}

}  // namespace

PoseFit procrustes(const ReceiverLayout& layout, std::span<const Vec3> estimates,
                   const Mat3& reference) {
  if (estimates.size() != layout.size()) {
    throw std::invalid_argument("procrustes: estimate count does not match layout");
  }
  const auto& w = layout.points();
  const Vec3 w_bar = layout.centroid();
  Vec3 r_bar = Vec3::Zero();
  for (const auto& r : estimates) r_bar += r;
  r_bar /= static_cast<double>(estimates.size());

  Mat3 cross = Mat3::Zero();
  for (std::size_t j = 0; j < w.size(); ++j) {
    const Vec3 wt = w[j] - w_bar;
    const Vec3 rt = estimates[j] - r_bar;
    cross += wt * rt.transpose();
  }

  PoseFit fit;
  const Svd3 svd = svd3(cross);
  fit.singular_values = svd.sigma;

  const double rank_tol = 1e-10 * std::max(svd.sigma(0), 1e-300);
  Mat3 rot;
  if (svd.sigma(0) <= 1e-300 || svd.sigma(1) <= rank_tol) {
    fit.degenerate = true;
    if (svd.sigma(0) <= 1e-300) {
      rot = reference;
    } else {
      // Only R u1 = v1 is determined; rotate the reference minimally onto it.
      const Vec3 u1 = svd.u.col(0);
      const Vec3 v1 = svd.v.col(0);
      rot = align(reference * u1, v1) * reference;
    }
  } else {
    const double d = (svd.v * svd.u.transpose()).determinant();
    Mat3 fix = Mat3::Identity();
    if (d < 0.0) {
      fix(2, 2) = -1.0;
      fit.reflection_corrected = true;
    }
    rot = svd.v * fix * svd.u.transpose();
  }

  fit.pose.rotation = rot;
  fit.pose.origin = r_bar - rot * w_bar;

  double residual = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    residual += (estimates[j] - fit.pose.origin - rot * w[j]).squaredNorm();
  }
  fit.residual = residual;
  return fit;
}

std::vector<Vec3> corrected_positions(const PoseFit& fit, const ReceiverLayout& layout) {
  std::vector<Vec3> out;
  out.reserve(layout.size());
  for (const auto& w : layout.points()) out.push_back(fit.pose.origin + fit.pose.rotation * w);
  return out;
}

double geodesic_distance(const Mat3& r1, const Mat3& r2) {
  check_rotation(r1);
  check_rotation(r2);
  const Mat3 rel = r1.transpose() * r2;
  const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double sin_part = 0.5 * axis.norm();
  const double cos_part = 0.5 * (rel.trace() - 1.0);
  return std::atan2(sin_part, cos_part);
}

Eigen::Quaterniond to_quaternion(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Mat3 from_quaternion(const Eigen::Quaterniond& q) { return q.normalized().toRotationMatrix(); }

}  // namespace setloc
