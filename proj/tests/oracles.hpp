#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "setloc/calibration.hpp"
#include "setloc/orientation.hpp"
#include "setloc/position.hpp"

namespace oracle {

/// Best objective of max c.x s.t. A x <= b by enumerating every vertex.
/// Returns nullopt when no vertex is feasible.
std::optional<double> lp_vertex_enumeration(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                            const Eigen::VectorXd& c, double feas_tol = 1e-9);

/// max_x min_i (rho_i - |x - B_i|) by nested grid refinement down to `step`.
struct GridCenter {
  Eigen::Vector3d center;
  double radius;
};
GridCenter chebyshev_grid(const std::vector<setloc::Ball>& balls, double step = 1e-3);

/// max over sampled unit directions v of v.(x - B_i) + l - rho_i, over all balls.
double sampled_violation(const std::vector<setloc::Ball>& balls, const Eigen::Vector3d& x, double l,
                         int samples, std::mt19937_64& rng);

/// max over sampled unit vectors u of |P u + v|.
double sampled_sup_norm(const Eigen::Matrix3d& p, const Eigen::Vector3d& v, int samples,
                        std::mt19937_64& rng);

/// Uniform random rotation.
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);
Eigen::Vector3d random_unit(std::mt19937_64& rng);

/// Smallest Procrustes residual over a quasi-random quaternion grid followed
/// by local random-search refinement.
double procrustes_grid_residual(const std::vector<Eigen::Vector3d>& layout,
                                const std::vector<Eigen::Vector3d>& estimates, int grid_points);

/// Degree-2 calibration optimum by grid search over (a1, a2) with the best
/// a0 for each pair; monotonicity checked on a grid of the domain.
double calibration_degree2_grid(const setloc::CalibrationDataset& data, double step,
                                double a1_lo, double a1_hi, double a2_lo, double a2_hi);

/// Objective sum_k (phi(D_k^u) - d_k) for a polynomial.
double calibration_objective(const setloc::CalibrationDataset& data,
                             const setloc::CalibrationPolynomial& phi);

/// Maximum-volume spheroid inside two balls of radius r centered at (+-a, 0, 0):
/// semi-axis `axial` along x and `radial` across.
struct Spheroid {
  double axial;
  double radial;
};
Spheroid lens_spheroid(double r, double a);

/// True when the 7x7 containment block can be made PSD by some
/// lambda in [0, lambda_max], by scanning and golden-section refinement.
bool some_lambda_psd(const Eigen::Matrix3d& p, const Eigen::Vector3d& offset, double radius,
                     double lambda_max, double tol);

/// Random ball intersection with a point known to be interior.
std::vector<setloc::Ball> random_instance(std::mt19937_64& rng, int balls);

}  // namespace oracle
