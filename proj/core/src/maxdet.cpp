#include "setloc/maxdet.hpp"

#include "setloc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

namespace setloc {

AffineSymMap::AffineSymMap(Eigen::Index dim, Eigen::Index variables)
    : dim_(dim), variables_(variables), constant_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (dim <= 0) throw std::invalid_argument("AffineSymMap: dimension must be positive");
}

void AffineSymMap::set_constant(const Eigen::MatrixXd& g0) {
  if (g0.rows() != dim_ || g0.cols() != dim_) {
    throw std::invalid_argument("AffineSymMap: constant has wrong shape");
  }
  constant_ = 0.5 * (g0 + g0.transpose());
}

AffineSymMap::Term& AffineSymMap::term_for(Eigen::Index variable) {
  if (variable < 0 || variable >= variables_) {
    throw std::invalid_argument("AffineSymMap: variable index out of range");
  }
  for (auto& t : terms_) {
    if (t.variable == variable) return t;
  }
  terms_.push_back(Term{variable, Eigen::MatrixXd::Zero(dim_, dim_)});
  return terms_.back();
}

void AffineSymMap::add_term(Eigen::Index variable, const Eigen::MatrixXd& g) {
  if (g.rows() != dim_ || g.cols() != dim_) {
    throw std::invalid_argument("AffineSymMap: coefficient has wrong shape");
  }
  term_for(variable).coefficient += 0.5 * (g + g.transpose());
}

void AffineSymMap::add_entry(Eigen::Index variable, Eigen::Index row, Eigen::Index col,
                             double value) {
  auto& c = term_for(variable).coefficient;
  c(row, col) += value;
  if (row != col) c(col, row) += value;
}

void AffineSymMap::add_constant_entry(Eigen::Index row, Eigen::Index col, double value) {
  constant_(row, col) += value;
  if (row != col) constant_(col, row) += value;
}

Eigen::MatrixXd AffineSymMap::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd g = constant_;
  for (const auto& t : terms_) g += x(t.variable) * t.coefficient;
  return g;
}

MaxDetProblem::MaxDetProblem(Eigen::Index n)
    : variables(n),
      objective(Eigen::VectorXd::Zero(n)),
      eq_a(0, n),
      eq_b(0),
      ineq_c(0, n),
      ineq_d(0) {
  if (n <= 0) throw std::invalid_argument("MaxDetProblem: variable count must be positive");
}

void MaxDetProblem::add_equality(const Eigen::Ref<const Eigen::VectorXd>& row, double rhs) {
  if (row.size() != variables) throw std::invalid_argument("MaxDetProblem: bad equality row");
  eq_a.conservativeResize(eq_a.rows() + 1, variables);
  eq_a.bottomRows(1) = row.transpose();
  eq_b.conservativeResize(eq_b.size() + 1);
  eq_b(eq_b.size() - 1) = rhs;
}

void MaxDetProblem::add_inequality(const Eigen::Ref<const Eigen::VectorXd>& row, double rhs) {
  if (row.size() != variables) throw std::invalid_argument("MaxDetProblem: bad inequality row");
  ineq_c.conservativeResize(ineq_c.rows() + 1, variables);
  ineq_c.bottomRows(1) = row.transpose();
  ineq_d.conservativeResize(ineq_d.size() + 1);
  ineq_d(ineq_d.size() - 1) = rhs;
}

void MaxDetProblem::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (objective.size() != variables) fail("MaxDetProblem: objective length mismatch");
  if (eq_a.cols() != variables || eq_a.rows() != eq_b.size()) {
    fail("MaxDetProblem: equality system dimensions inconsistent");
  }
  if (ineq_c.cols() != variables || ineq_c.rows() != ineq_d.size()) {
    fail("MaxDetProblem: inequality system dimensions inconsistent");
  }
  if (det_block && det_block->variables() != variables) {
    fail("MaxDetProblem: det block variable count mismatch");
  }
  for (const auto& b : lmi_blocks) {
    if (b.variables() != variables) fail("MaxDetProblem: LMI block variable count mismatch");
  }
  if (start && start->size() != variables) fail("MaxDetProblem: start point length mismatch");
}

namespace {

struct Block {
  Eigen::MatrixXd g0;
  std::vector<std::pair<Eigen::Index, Eigen::MatrixXd>> terms;

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd g = g0;
    for (const auto& [k, m] : terms) g += z(k) * m;
    return g;
  }
};

// The problem restated over z with x = x_p + N z.
struct Reduced {
  Eigen::Index nz = 0;
  Eigen::VectorXd c;
  std::optional<Block> det;
  std::vector<Block> blocks;
  Eigen::MatrixXd ineq_c;
  Eigen::VectorXd ineq_d;

  double barrier_degree() const {
    double theta = static_cast<double>(ineq_c.rows());
    for (const auto& b : blocks) theta += static_cast<double>(b.g0.rows());
    return theta;
  }
};

Block reduce_block(const AffineSymMap& g, const Eigen::VectorXd& xp, const Eigen::MatrixXd& null,
                   bool identity) {
  Block out;
  if (identity) {
    out.g0 = g.constant();
    for (const auto& t : g.terms()) out.terms.emplace_back(t.variable, t.coefficient);
    return out;
  }
  out.g0 = g.evaluate(xp);
  for (Eigen::Index k = 0; k < null.cols(); ++k) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.dim(), g.dim());
    for (const auto& t : g.terms()) m += null(t.variable, k) * t.coefficient;
    if (m.cwiseAbs().maxCoeff() > 0.0) out.terms.emplace_back(k, std::move(m));
  }
  return out;
}

struct Evaluation {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

// Adds weight * (-log det G) and its derivatives. Returns false if G is not PD.
bool accumulate_logdet(const Block& block, const Eigen::VectorXd& z, double weight,
                       bool derivatives, Evaluation& e) {
  const Eigen::MatrixXd g = block.evaluate(z);
  const Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd l = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) return false;
    logdet += 2.0 * std::log(l(i, i));
  }
  e.value -= weight * logdet;
  if (!derivatives) return true;

  std::vector<Eigen::MatrixXd> scaled;
  scaled.reserve(block.terms.size());
  const auto lower = l.triangularView<Eigen::Lower>();
  for (const auto& [k, m] : block.terms) {
    const Eigen::MatrixXd y = lower.solve(m);
    scaled.push_back(lower.solve(y.transpose()).transpose());
  }
  for (std::size_t a = 0; a < block.terms.size(); ++a) {
    const Eigen::Index ka = block.terms[a].first;
    e.grad(ka) -= weight * scaled[a].trace();
    for (std::size_t b = a; b < block.terms.size(); ++b) {
      const Eigen::Index kb = block.terms[b].first;
      const double h = weight * scaled[a].cwiseProduct(scaled[b]).sum();
      e.hess(ka, kb) += h;
      if (ka != kb || a != b) e.hess(kb, ka) += h;
    }
  }
  return true;
}

// F(z) = t (c.z - log det P(z)) - sum log det G_k(z) - sum log(d - C z).
Evaluation evaluate(const Reduced& r, const Eigen::VectorXd& z, double t, bool derivatives) {
  Evaluation e;
  if (derivatives) {
    e.grad = t * r.c;
    e.hess = Eigen::MatrixXd::Zero(r.nz, r.nz);
  }
  e.value = t * r.c.dot(z);
  if (r.det && !accumulate_logdet(*r.det, z, t, derivatives, e)) return e;
  for (const auto& b : r.blocks) {
    if (!accumulate_logdet(b, z, 1.0, derivatives, e)) return e;
  }
  if (r.ineq_c.rows() > 0) {
    const Eigen::VectorXd s = r.ineq_d - r.ineq_c * z;
    if (!(s.minCoeff() > 0.0)) return e;
    e.value -= s.array().log().sum();
    if (derivatives) {
      const Eigen::VectorXd inv = s.cwiseInverse();
      e.grad += r.ineq_c.transpose() * inv;
      e.hess += r.ineq_c.transpose() * inv.cwiseAbs2().asDiagonal() * r.ineq_c;
    }
  }
  e.feasible = std::isfinite(e.value);
  return e;
}

bool strictly_feasible(const Reduced& r, const Eigen::VectorXd& z) {
  return evaluate(r, z, 1.0, false).feasible;
}

enum class Centering { Converged, Stalled, Unbounded, Limit, EarlyStop };

class BarrierMethod {
 public:
  BarrierMethod(const Reduced& r, const MaxDetOptions& opt, int& steps)
      : r_(r), opt_(opt), steps_(steps) {}

  std::function<bool(const Eigen::VectorXd&)> early_stop;

  Centering center(Eigen::VectorXd& z, double t) {
    for (int it = 0; it < opt_.max_centering_steps; ++it) {
      if (steps_ >= opt_.max_newton_steps) return Centering::Limit;
      const Evaluation e = evaluate(r_, z, t, true);
      if (!e.feasible) return Centering::Stalled;

      Eigen::VectorXd step = newton_step(e);
      const double decrement_sq = -e.grad.dot(step);
      if (!std::isfinite(decrement_sq)) return Centering::Stalled;
      // Below the roundoff level of F the decrement carries no information.
      const double floor =
          std::max(2e-10, 64.0 * std::numeric_limits<double>::epsilon() * std::abs(e.value));
      if (decrement_sq <= floor) return Centering::Converged;

      const double decrement = std::sqrt(std::max(decrement_sq, 0.0));
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
        const Eigen::VectorXd trial = z + alpha * step;
        const Evaluation f = evaluate(r_, trial, t, false);
        if (!f.feasible) continue;
        // Inside the quadratic-convergence region a feasible full step is safe;
        // elsewhere demand Armijo decrease.
        const double slack = 1e-13 * std::max(1.0, std::abs(e.value));
        if (decrement < 0.2 || f.value <= e.value - 0.25 * alpha * decrement_sq + slack) {
          z = trial;
          accepted = true;
          break;
        }
      }
      ++steps_;
      if (!accepted) {
        return decrement_sq < 1e-6 ? Centering::Converged : Centering::Stalled;
      }
      if (early_stop && early_stop(z)) return Centering::EarlyStop;
      if (z.cwiseAbs().maxCoeff() > 1e13) return Centering::Unbounded;
    }
    return Centering::Limit;
  }

  struct Outcome {
    Centering last;
    double gap;
  };

  Outcome run(Eigen::VectorXd& z, double gap_tol) {
    const double theta = r_.barrier_degree();
    double t = 1.0 / opt_.mu_initial;
    while (true) {
      const Centering c = center(z, t);
      const double gap = theta / t;
      if (c != Centering::Converged) return {c, gap};
      if (gap <= gap_tol) return {c, gap};
      t /= opt_.mu_factor;
    }
  }

 private:
  Eigen::VectorXd newton_step(const Evaluation& e) const {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(e.hess);
    Eigen::VectorXd step = ldlt.solve(-e.grad);
    if (ldlt.info() == Eigen::Success && step.allFinite()) return step;
    const double ridge = 1e-12 * std::max(1.0, e.hess.diagonal().cwiseAbs().maxCoeff());
    const Eigen::MatrixXd reg =
        e.hess + ridge * Eigen::MatrixXd::Identity(e.hess.rows(), e.hess.cols());
    return reg.ldlt().solve(-e.grad);
  }

  const Reduced& r_;
  const MaxDetOptions& opt_;
  int& steps_;
};

// Phase I: minimize s subject to G_k(z) + s I > 0, C z - s < d, s >= -1, |z| <= box.
std::optional<Eigen::VectorXd> phase_one(const Reduced& r, const Eigen::VectorXd& z0,
                                         const MaxDetOptions& opt, int& steps) {
  Reduced p;
  p.nz = r.nz + 1;
  p.c = Eigen::VectorXd::Zero(p.nz);
  p.c(r.nz) = 1.0;

  double scale = 1.0;
  double s0 = 0.0;
  auto lift = [&](const Block& b) {
    Block out;
    out.g0 = b.g0;
    out.terms = b.terms;
    out.terms.emplace_back(r.nz, Eigen::MatrixXd::Identity(b.g0.rows(), b.g0.cols()));
    scale = std::max(scale, b.g0.cwiseAbs().maxCoeff());
    s0 = std::max(s0, -min_eigenvalue(b.evaluate(z0)));
    return out;
  };
  if (r.det) p.blocks.push_back(lift(*r.det));
  for (const auto& b : r.blocks) p.blocks.push_back(lift(b));

  const double box = 1e4 * std::max(1.0, z0.cwiseAbs().maxCoeff());
  const Eigen::Index m = r.ineq_c.rows();
  p.ineq_c = Eigen::MatrixXd::Zero(m + 1 + 2 * r.nz, p.nz);
  p.ineq_d = Eigen::VectorXd::Zero(m + 1 + 2 * r.nz);
  if (m > 0) {
    p.ineq_c.topLeftCorner(m, r.nz) = r.ineq_c;
    p.ineq_c.block(0, r.nz, m, 1).setConstant(-1.0);
    p.ineq_d.head(m) = r.ineq_d;
    s0 = std::max(s0, (r.ineq_c * z0 - r.ineq_d).maxCoeff());
  }
  p.ineq_c(m, r.nz) = -1.0;
  p.ineq_d(m) = 1.0;
  for (Eigen::Index i = 0; i < r.nz; ++i) {
    p.ineq_c(m + 1 + 2 * i, i) = 1.0;
    p.ineq_c(m + 2 + 2 * i, i) = -1.0;
    p.ineq_d(m + 1 + 2 * i) = box;
    p.ineq_d(m + 2 + 2 * i) = box;
  }

  Eigen::VectorXd z(p.nz);
  z.head(r.nz) = z0;
  z(r.nz) = s0 + 1.0;

  const double margin = 1e-9 * scale;
  BarrierMethod barrier(p, opt, steps);
  barrier.early_stop = [&](const Eigen::VectorXd& w) {
    return w(r.nz) < -margin && strictly_feasible(r, w.head(r.nz));
  };
  const auto outcome = barrier.run(z, 1e-9 * scale);
  if (outcome.last == Centering::EarlyStop) return Eigen::VectorXd(z.head(r.nz));
  return std::nullopt;
}

}  // namespace

MaxDetResult solve_maxdet(const MaxDetProblem& problem, const MaxDetOptions& options) {
  problem.validate();
  const Eigen::Index n = problem.variables;

  // Null-space parameterization of the equalities.
  Eigen::VectorXd xp = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd null = Eigen::MatrixXd::Identity(n, n);
  const bool identity = problem.eq_a.rows() == 0;
  MaxDetResult result;
  if (!identity) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(problem.eq_a,
                                                Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-12 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    const Eigen::MatrixXd v = svd.matrixV();
    xp = v.leftCols(rank) *
         (sv.head(rank).cwiseInverse().asDiagonal() *
          (svd.matrixU().leftCols(rank).transpose() * problem.eq_b));
    null = v.rightCols(n - rank);
    const double residual = (problem.eq_a * xp - problem.eq_b).cwiseAbs().maxCoeff();
    if (residual > 1e-9 * std::max(1.0, problem.eq_b.cwiseAbs().maxCoeff())) {
      result.status.kind = SolveKind::Infeasible;
      result.status.primal_residual = residual;
      result.x = xp;
      return result;
    }
  }

  Reduced r;
  r.nz = null.cols();
  r.c = null.transpose() * problem.objective;
  if (problem.det_block) r.det = reduce_block(*problem.det_block, xp, null, identity);
  for (const auto& b : problem.lmi_blocks) r.blocks.push_back(reduce_block(b, xp, null, identity));
  if (problem.ineq_c.rows() > 0) {
    r.ineq_c = problem.ineq_c * null;
    r.ineq_d = problem.ineq_d - problem.ineq_c * xp;
  } else {
    r.ineq_c = Eigen::MatrixXd(0, r.nz);
    r.ineq_d = Eigen::VectorXd(0);
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(r.nz);
  if (problem.start) z = null.transpose() * (*problem.start - xp);

  int steps = 0;
  if (r.nz == 0 || !strictly_feasible(r, z)) {
    result.used_phase1 = true;
    auto found = r.nz > 0 ? phase_one(r, z, options, steps) : std::nullopt;
    if (!found) {
      result.status.kind = SolveKind::Infeasible;
      result.x = xp + null * z;
      result.newton_steps = steps;
      return result;
    }
    z = *found;
  }

  BarrierMethod barrier(r, options, steps);
  const auto outcome = barrier.run(z, options.gap_tol);

  result.x = xp + null * z;
  result.gap = outcome.gap;
  result.newton_steps = steps;
  switch (outcome.last) {
    case Centering::Converged:
      result.status.kind = SolveKind::Optimal;
      break;
    case Centering::Unbounded:
      result.status.kind = SolveKind::Unbounded;
      break;
    default:
      result.status.kind = SolveKind::IterationLimit;
      break;
  }

  double primal = 0.0;
  if (problem.eq_a.rows() > 0) {
    primal = (problem.eq_a * result.x - problem.eq_b).cwiseAbs().maxCoeff();
  }
  for (const auto& b : problem.lmi_blocks) {
    primal = std::max(primal, -min_eigenvalue(b.evaluate(result.x)));
  }
  if (problem.ineq_c.rows() > 0) {
    primal = std::max(primal, (problem.ineq_c * result.x - problem.ineq_d).maxCoeff());
  }
  double objective = -problem.objective.dot(result.x);
  if (problem.det_block) {
    const Eigen::MatrixXd p = problem.det_block->evaluate(result.x);
    const Eigen::LLT<Eigen::MatrixXd> llt(p);
    double logdet = -std::numeric_limits<double>::infinity();
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd l = llt.matrixL();
      logdet = 2.0 * l.diagonal().array().log().sum();
    }
    objective += logdet;
    primal = std::max(primal, -min_eigenvalue(p));
  }
  result.status.objective = objective;
  result.status.primal_residual = std::max(primal, 0.0);
  result.status.dual_residual = result.gap;
  return result;
}

}  // namespace setloc
