#include "setloc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace setloc {

std::string_view to_string(SolveKind kind) {
  switch (kind) {
    case SolveKind::Optimal: return "optimal";
    case SolveKind::Infeasible: return "infeasible";
    case SolveKind::Unbounded: return "unbounded";
    case SolveKind::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

LinearProgram::LinearProgram(Eigen::VectorXd objective)
    : objective_(std::move(objective)) {
  if (objective_.size() == 0) {
    throw std::invalid_argument("LinearProgram: variable count must be positive");
  }
  a_.resize(16, objective_.size());
  b_.resize(16);
}

void LinearProgram::add_constraint(const Eigen::Ref<const Eigen::VectorXd>& row,
                                   double bound) {
  if (row.size() != objective_.size()) {
    throw std::invalid_argument("LinearProgram: constraint row has wrong length");
  }
  if (rows_ == a_.rows()) {
    a_.conservativeResize(2 * rows_, Eigen::NoChange);
    b_.conservativeResize(2 * rows_);
  }
  a_.row(rows_) = row.transpose();
  b_(rows_) = bound;
  ++rows_;
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;

// Tableau over y >= 0 with columns [x+ | x- | slack | artificial | rhs] and
// the reduced-cost row stored as the last row.
class Tableau {
 public:
  Tableau(const LinearProgram& lp)
      : m_(lp.constraints()), n_(lp.variables()) {
    const auto a = lp.a();
    const auto b = lp.b();
    std::vector<Eigen::Index> negative_rows;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (b(i) < 0.0) negative_rows.push_back(i);
    }
    artificials_ = static_cast<Eigen::Index>(negative_rows.size());
    cols_ = 2 * n_ + m_ + artificials_;
    t_ = Eigen::MatrixXd::Zero(m_ + 1, cols_ + 1);
    basis_.resize(static_cast<std::size_t>(m_));

    Eigen::Index next_art = 0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      t_.row(i).segment(0, n_) = sign * a.row(i);
      t_.row(i).segment(n_, n_) = -sign * a.row(i);
      t_(i, 2 * n_ + i) = sign;
      t_(i, cols_) = sign * b(i);
      if (sign < 0.0) {
        const Eigen::Index col = 2 * n_ + m_ + next_art++;
        t_(i, col) = 1.0;
        basis_[static_cast<std::size_t>(i)] = col;
      } else {
        basis_[static_cast<std::size_t>(i)] = 2 * n_ + i;
      }
    }
  }

  Eigen::Index artificial_begin() const { return 2 * n_ + m_; }
  bool has_artificials() const { return artificials_ > 0; }

  // Loads a cost vector and prices out the current basis.
  void set_costs(const Eigen::VectorXd& cost) {
    t_.row(m_).setZero();
    t_.row(m_).head(cols_) = cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  // Runs Bland's-rule pivots over columns [0, eligible_end).
  SolveKind run(Eigen::Index eligible_end, long& pivots, long max_pivots) {
    while (true) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < eligible_end; ++j) {
        if (t_(m_, j) < -kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return SolveKind::Optimal;
      if (pivots >= max_pivots) return SolveKind::IterationLimit;

      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double coef = t_(i, enter);
        if (coef <= kPivotTol) continue;
        const double ratio = t_(i, cols_) / coef;
        if (leave < 0) {
          best_ratio = ratio;
          leave = i;
          continue;
        }
        const double slack = 1e-12 * std::max(1.0, std::abs(best_ratio));
        if (ratio < best_ratio - slack) {
          best_ratio = ratio;
          leave = i;
        } else if (ratio <= best_ratio + slack &&
                   basis_[static_cast<std::size_t>(i)] <
                       basis_[static_cast<std::size_t>(leave)]) {
          leave = i;
        }
      }
      if (leave < 0) return SolveKind::Unbounded;
      pivot(leave, enter);
      ++pivots;
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    t_(row, col) = 1.0;
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) {
        t_.row(i) -= f * t_.row(row);
        t_(i, col) = 0.0;
      }
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Pivots basic artificials (at zero level) out of the basis where possible.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < artificial_begin()) continue;
      Eigen::Index best = -1;
      double best_abs = kPivotTol;
      for (Eigen::Index j = 0; j < artificial_begin(); ++j) {
        if (std::abs(t_(i, j)) > best_abs) {
          best_abs = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  double objective_value() const { return -t_(m_, cols_); }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(cols_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      y(basis_[static_cast<std::size_t>(i)]) = t_(i, cols_);
    }
    return y.head(n_) - y.segment(n_, n_);
  }

  // Multipliers of the original rows equal the slack reduced costs.
  Eigen::VectorXd multipliers() const {
    return t_.row(m_).segment(2 * n_, m_).transpose();
  }

  Eigen::Index cols() const { return cols_; }

 private:
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::Index artificials_ = 0;
  Eigen::Index cols_ = 0;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& options) {
  if (lp.constraints() == 0) {
    throw std::invalid_argument("solve_lp: at least one constraint is required");
  }
  const auto a = lp.a();
  const auto b = lp.b();
  const Eigen::Index n = lp.variables();
  const double b_scale = std::max(1.0, b.cwiseAbs().maxCoeff());

  Tableau tab(lp);
  LpResult result;
  long pivots = 0;

  if (tab.has_artificials()) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(tab.cols());
    phase1.tail(tab.cols() - tab.artificial_begin()).setOnes();
    tab.set_costs(phase1);
    const SolveKind kind = tab.run(tab.cols(), pivots, options.max_pivots);
    if (kind == SolveKind::IterationLimit) {
      result.status.kind = kind;
      result.x = tab.primal();
      return result;
    }
    const double infeasibility = tab.objective_value();
    if (infeasibility > options.feasibility_tol * b_scale) {
      result.status.kind = SolveKind::Infeasible;
      result.status.primal_residual = infeasibility;
      result.x = tab.primal();
      return result;
    }
    tab.expel_artificials();
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(tab.cols());
  cost.head(n) = -lp.objective();
  cost.segment(n, n) = lp.objective();
  tab.set_costs(cost);
  const SolveKind kind = tab.run(tab.artificial_begin(), pivots, options.max_pivots);

  result.x = tab.primal();
  result.multipliers = tab.multipliers();
  result.status.kind = kind;
  result.status.objective = lp.objective().dot(result.x);
  result.status.primal_residual =
      std::max(0.0, (a * result.x - b).maxCoeff());
  if (kind == SolveKind::Optimal) {
    const double stationarity =
        (a.transpose() * result.multipliers - lp.objective()).cwiseAbs().maxCoeff();
    const double sign = std::max(0.0, -result.multipliers.minCoeff());
    result.status.dual_residual = std::max(stationarity, sign);
  }
  return result;
}

}  // namespace setloc
