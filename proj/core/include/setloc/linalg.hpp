#pragma once

#include <Eigen/Dense>

namespace setloc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Eigen-decomposition of a real symmetric matrix.
/// `values` are ascending; column i of `vectors` pairs with values(i).
struct SymEig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Cyclic Jacobi eigen-solver for small dense symmetric matrices.
/// Throws std::invalid_argument when `m` is not square or not symmetric to
/// 1e-12 * max(1, |m|).
SymEig sym_eig(const Eigen::MatrixXd& m);

/// M = u * diag(sigma) * v^T with sigma nonnegative and descending.
struct Svd3 {
  Mat3 u;
  Vec3 sigma;
  Mat3 v;
};

Svd3 svd3(const Mat3& m);

/// Smallest eigenvalue of a symmetric matrix (no symmetry check).
double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace setloc
