#include <cmath>

#include <gtest/gtest.h>

#include "setloc/linalg.hpp"
#include "setloc/maxdet.hpp"

using namespace setloc;

namespace {

Eigen::VectorXd unit(Eigen::Index n, Eigen::Index i) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v(i) = 1.0;
  return v;
}

MaxDetProblem diagonal_budget() {
  MaxDetProblem p(2);
  AffineSymMap det(2, 2);
  det.add_entry(0, 0, 0, 1.0);
  det.add_entry(1, 1, 1, 1.0);
  p.det_block = det;
  p.add_inequality(Eigen::Vector2d(1.0, 1.0), 2.0);
  p.add_inequality(-unit(2, 0), 0.0);
  p.add_inequality(-unit(2, 1), 0.0);
  return p;
}

}  // namespace

TEST(AffineSymMap, SymmetrizesInput) {
  AffineSymMap m(2, 1);
  Eigen::Matrix2d g;
  g << 1.0, 2.0, 0.0, 1.0;
  m.add_term(0, g);
  const auto v = m.evaluate(Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(v(0, 1), v(1, 0), 1e-15);
  EXPECT_NEAR(v(0, 1), 1.0, 1e-15);
}

TEST(SolveMaxDet, ScalarCap) {
  MaxDetProblem p(1);
  AffineSymMap det(1, 1);
  det.add_entry(0, 0, 0, 1.0);
  p.det_block = det;
  AffineSymMap cap(1, 1);
  cap.add_constant_entry(0, 0, 2.0);
  cap.add_entry(0, 0, 0, -1.0);
  p.lmi_blocks.push_back(cap);
  p.add_inequality(-unit(1, 0), 0.0);
  const auto r = solve_maxdet(p);
  ASSERT_TRUE(r.status.optimal());
  EXPECT_NEAR(r.x(0), 2.0, 1e-6);
  EXPECT_LE(r.gap, 1e-7);
}

TEST(SolveMaxDet, DiagonalBudgetIsSymmetric) {
  const auto r = solve_maxdet(diagonal_budget());
  ASSERT_TRUE(r.status.optimal());
  EXPECT_NEAR(r.x(0), 1.0, 1e-6);
  EXPECT_NEAR(r.x(1), 1.0, 1e-6);
}

TEST(SolveMaxDet, EqualitiesAreHonored) {
  auto p = diagonal_budget();
  p.add_equality(unit(2, 0), 0.5);
  const auto r = solve_maxdet(p);
  ASSERT_TRUE(r.status.optimal());
  EXPECT_NEAR(r.x(0), 0.5, 1e-8);
  EXPECT_NEAR(r.x(1), 1.5, 1e-6);
}

TEST(SolveMaxDet, PureSdpWithLinearObjective) {
  // minimize x s.t. [[x, 1], [1, x]] >= 0  ->  x = 1
  MaxDetProblem p(1);
  p.objective(0) = 1.0;
  AffineSymMap g(2, 1);
  g.add_constant_entry(0, 1, 1.0);
  g.add_entry(0, 0, 0, 1.0);
  g.add_entry(0, 1, 1, 1.0);
  p.lmi_blocks.push_back(g);
  const auto r = solve_maxdet(p);
  ASSERT_TRUE(r.status.optimal());
  EXPECT_NEAR(r.x(0), 1.0, 1e-6);
  EXPECT_GE(min_eigenvalue(g.evaluate(r.x)), -1e-8);
}

TEST(SolveMaxDet, ReportsInfeasible) {
  MaxDetProblem p(1);
  p.objective(0) = 1.0;
  AffineSymMap nonneg(1, 1);
  nonneg.add_entry(0, 0, 0, 1.0);
  AffineSymMap below(1, 1);
  below.add_constant_entry(0, 0, -1.0);
  below.add_entry(0, 0, 0, -1.0);
  p.lmi_blocks.push_back(nonneg);
  p.lmi_blocks.push_back(below);
  EXPECT_EQ(solve_maxdet(p).status.kind, SolveKind::Infeasible);
}

TEST(SolveMaxDet, UsesSuppliedStartOrPhaseOne) {
  auto p = diagonal_budget();
  p.start = Eigen::Vector2d(0.5, 0.5);
  const auto with_start = solve_maxdet(p);
  ASSERT_TRUE(with_start.status.optimal());
  EXPECT_FALSE(with_start.used_phase1);

  p.start = Eigen::Vector2d(5.0, 5.0);
  const auto bad_start = solve_maxdet(p);
  ASSERT_TRUE(bad_start.status.optimal());
  EXPECT_TRUE(bad_start.used_phase1);
  EXPECT_NEAR(bad_start.x(0), 1.0, 1e-6);
}

TEST(SolveMaxDet, HalvingToleranceIsSelfConsistent) {
  // maximize log det [[p, q], [q, r]] within trace <= 3 and a 2x2 LMI cap.
  MaxDetProblem p(3);
  AffineSymMap det(2, 3);
  det.add_entry(0, 0, 0, 1.0);
  det.add_entry(1, 0, 1, 1.0);
  det.add_entry(2, 1, 1, 1.0);
  p.det_block = det;
  AffineSymMap cap(2, 3);
  Eigen::Matrix2d c0;
  c0 << 2.0, 0.3, 0.3, 1.5;
  cap.set_constant(c0);
  cap.add_entry(0, 0, 0, -1.0);
  cap.add_entry(1, 0, 1, -1.0);
  cap.add_entry(2, 1, 1, -1.0);
  p.lmi_blocks.push_back(cap);
  p.add_inequality(Eigen::Vector3d(1.0, 0.0, 1.0), 3.0);

  MaxDetOptions coarse;
  coarse.gap_tol = 1e-6;
  MaxDetOptions fine;
  fine.gap_tol = 5e-7;
  const auto a = solve_maxdet(p, coarse);
  const auto b = solve_maxdet(p, fine);
  ASSERT_TRUE(a.status.optimal());
  ASSERT_TRUE(b.status.optimal());
  EXPECT_NEAR(a.status.objective, b.status.objective, 1e-6);
  EXPECT_GE(min_eigenvalue(cap.evaluate(b.x)), -1e-8);
  EXPECT_GE(min_eigenvalue(det.evaluate(b.x)), 0.0);
}

TEST(SolveMaxDet, ValidateRejectsBadDimensions) {
  MaxDetProblem p(2);
  p.lmi_blocks.emplace_back(2, 3);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  MaxDetProblem q(2);
  EXPECT_THROW(q.add_inequality(Eigen::Vector3d::Ones(), 1.0), std::invalid_argument);
}
