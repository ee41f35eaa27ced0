#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "setloc/lp.hpp"

namespace setloc {

/// Symmetric-matrix-valued affine map x -> G0 + sum_k x_k G_k.
/// Every matrix passed in is symmetrized on entry.
class AffineSymMap {
 public:
  struct Term {
    Eigen::Index variable;
    Eigen::MatrixXd coefficient;
  };

  AffineSymMap(Eigen::Index dim, Eigen::Index variables);

  void set_constant(const Eigen::MatrixXd& g0);
  /// Accumulates `g` into the coefficient of `variable`.
  void add_term(Eigen::Index variable, const Eigen::MatrixXd& g);
  /// Adds `value` at (row, col) and (col, row) of the coefficient of `variable`.
  void add_entry(Eigen::Index variable, Eigen::Index row, Eigen::Index col, double value);
  void add_constant_entry(Eigen::Index row, Eigen::Index col, double value);

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

  Eigen::Index dim() const { return dim_; }
  Eigen::Index variables() const { return variables_; }
  const Eigen::MatrixXd& constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  Term& term_for(Eigen::Index variable);

  Eigen::Index dim_;
  Eigen::Index variables_;
  Eigen::MatrixXd constant_;
  std::vector<Term> terms_;
};

/// maximize  log det P(x) - c.x
/// s.t.      G_k(x) >= 0 (PSD),  A x = b,  C x <= d.
///
/// Without a det block the objective is the linear -c.x and the problem is a
/// plain SDP.
struct MaxDetProblem {
  explicit MaxDetProblem(Eigen::Index variables);

  Eigen::Index variables;
  Eigen::VectorXd objective;
  std::optional<AffineSymMap> det_block;
  std::vector<AffineSymMap> lmi_blocks;
  Eigen::MatrixXd eq_a;
  Eigen::VectorXd eq_b;
  Eigen::MatrixXd ineq_c;
  Eigen::VectorXd ineq_d;
  /// Optional strictly feasible point; phase I runs when absent or infeasible.
  std::optional<Eigen::VectorXd> start;

  void add_equality(const Eigen::Ref<const Eigen::VectorXd>& row, double rhs);
  void add_inequality(const Eigen::Ref<const Eigen::VectorXd>& row, double rhs);

  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
};

struct MaxDetOptions {
  double gap_tol = 1e-7;
  double mu_initial = 1.0;
  double mu_factor = 0.1;
  int max_newton_steps = 3000;
  int max_centering_steps = 200;
};

struct MaxDetResult {
  SolveStatus status;
  Eigen::VectorXd x;
  double gap = 0.0;
  int newton_steps = 0;
  bool used_phase1 = false;
};

/// Log-barrier Newton method with mu <- mu * mu_factor. Equalities are
/// removed by a null-space parameterization before the barrier loop.
MaxDetResult solve_maxdet(const MaxDetProblem& problem, const MaxDetOptions& options = {});

}  // namespace setloc
