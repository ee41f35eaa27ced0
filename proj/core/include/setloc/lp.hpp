#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace setloc {

enum class SolveKind { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(SolveKind kind);

/// Outcome of a numerical solve. Residuals are max-norms: for LPs the primal
/// residual is max(A x - b, 0) (or the phase-I infeasibility on Infeasible)
/// and the dual residual is |A^T y - c| plus any negative multiplier.
struct SolveStatus {
  SolveKind kind = SolveKind::IterationLimit;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;

  bool optimal() const { return kind == SolveKind::Optimal; }
};

/// maximize c.x subject to A x <= b, x free.
class LinearProgram {
 public:
  explicit LinearProgram(Eigen::VectorXd objective);

  void add_constraint(const Eigen::Ref<const Eigen::VectorXd>& row, double bound);

  Eigen::Index variables() const { return objective_.size(); }
  Eigen::Index constraints() const { return rows_; }
  const Eigen::VectorXd& objective() const { return objective_; }
  auto a() const { return a_.topRows(rows_); }
  auto b() const { return b_.head(rows_); }

 private:
  Eigen::VectorXd objective_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::Index rows_ = 0;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  long max_pivots = 200000;
};

struct LpResult {
  SolveStatus status;
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per constraint, >= 0 at optimum
};

/// Dense two-phase tableau simplex with Bland's rule. Throws
/// std::invalid_argument for a program with no constraints.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace setloc
