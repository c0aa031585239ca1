#include <gtest/gtest.h>

#include <random>

#include "fairreg/qp_core.hpp"
#include "test_support.hpp"

using namespace fairreg;
using fairreg::testkit::OracleProblem;

namespace {

struct Tiny {
  Matrix x = Matrix::Ones(3, 1);
  Vector y = (Vector(3) << 0.0, 0.0, 3.0).finished();
  Vector one = Vector::Ones(1);
};

double sse(const Matrix& x, const Vector& y, const Vector& theta) { return (y - x * theta).squaredNorm(); }

}  // namespace

TEST(HandExamples, LeastSquaresMean) {
  Tiny t;
  const KktSolution s = solve_ls(t.x, t.y);
  EXPECT_NEAR(s.theta[0], 1.0, 1e-14);
  EXPECT_NEAR(s.sse, 6.0, 1e-12);
  EXPECT_EQ(s.rank, 1);
  EXPECT_FALSE(s.constraint_active);
  EXPECT_EQ(s.multiplier, 0.0);
}

TEST(HandExamples, EqualityForcesThirdPrediction) {
  Tiny t;
  const KktSolution s = solve_ls_eq(t.x, t.y, {t.one, 3.0, ConstraintSense::equality});
  EXPECT_NEAR(s.theta[0], 3.0, 1e-13);
  EXPECT_NEAR(s.sse, 18.0, 1e-11);
  // X'X theta = X'y - nu a  ->  9 = 3 - nu
  EXPECT_NEAR(s.multiplier, -6.0, 1e-11);
  EXPECT_TRUE(s.constraint_active);
}

TEST(HandExamples, InequalityBindingAndSlack) {
  Tiny t;
  const KktSolution bind = solve_ls_ineq(t.x, t.y, {t.one, 0.5, ConstraintSense::le});
  EXPECT_NEAR(bind.theta[0], 0.5, 1e-13);
  EXPECT_NEAR(bind.multiplier, 1.5, 1e-12);
  EXPECT_TRUE(bind.constraint_active);
  const KktSolution slack = solve_ls_ineq(t.x, t.y, {t.one, 2.0, ConstraintSense::le});
  EXPECT_NEAR(slack.theta[0], 1.0, 1e-13);
  EXPECT_EQ(slack.multiplier, 0.0);
  EXPECT_FALSE(slack.constraint_active);
}

TEST(HandExamples, LinearPenaltyClosedForm) {
  Tiny t;
  // theta = ybar + lambda / (2N) = 1 + 6/6
  EXPECT_NEAR(solve_ls_linear_penalty(t.x, t.y, t.one, 6.0).theta[0], 2.0, 1e-13);
  EXPECT_NEAR(solve_ls_linear_penalty(t.x, t.y, t.one, 0.0).theta[0], 1.0, 1e-14);
}

TEST(HandExamples, RankOnePenaltyClosedForm) {
  Tiny t;
  // 2(3 theta - 3) = 2 lambda (3 - theta) with lambda = 3  ->  theta = 2
  EXPECT_NEAR(solve_ls_rank1_penalty(t.x, t.y, t.one, 3.0, 3.0).theta[0], 2.0, 1e-13);
}

TEST(RankDeficiency, MinimumNormCompletion) {
  Matrix x(4, 2);
  x << 1, 1, 1, 1, 1, 1, 1, 1;
  const Vector y = (Vector(4) << 1, 2, 3, 4).finished();
  const KktSolution s = solve_ls(x, y);
  EXPECT_EQ(s.rank, 1);
  EXPECT_NEAR(s.theta[0], 1.25, 1e-12);
  EXPECT_NEAR(s.theta[1], 1.25, 1e-12);
  ASSERT_FALSE(s.diagnostics.empty());
  EXPECT_NE(s.diagnostics[0].find("rank-deficient"), std::string::npos);
}

TEST(Errors, InfeasibleAndNonFinite) {
  Tiny t;
  const Vector zero = Vector::Zero(1);
  try {
    solve_ls_eq(t.x, t.y, {zero, 1.0, ConstraintSense::equality});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible);
  }
  try {
    solve_ls_ineq(t.x, t.y, {zero, -1.0, ConstraintSense::le});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible);
  }
  EXPECT_NO_THROW(solve_ls_eq(t.x, t.y, {zero, 0.0, ConstraintSense::equality}));
  Vector bad = t.y;
  bad[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve_ls(t.x, bad), Error);
  EXPECT_THROW(solve_ls_linear_penalty(t.x, t.y, t.one, -1.0), Error);
}

TEST(Errors, UnboundedLinearPenalty) {
  Matrix x(3, 2);
  x << 1, 0, 1, 0, 1, 0;
  const Vector a = (Vector(2) << 0.0, 1.0).finished();
  try {
    solve_ls_linear_penalty(x, Vector::Ones(3), a, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::solver);
  }
}

class RandomSolves : public ::testing::TestWithParam<int> {};

TEST_P(RandomSolves, MatchOracleAndSatisfyKkt) {
  std::mt19937_64 gen(1000 + GetParam());
  const auto inst = testkit::random_ls_instance(gen);
  const Index p = inst.x.cols();
  LeastSquaresSystem sys(inst.x, inst.y);

  const KktSolution ls = sys.solve();
  OracleProblem base{&inst.x, &inst.y};
  EXPECT_LT(testkit::relative_gap(ls.sse, testkit::oracle_objective(base, testkit::oracle_solve(base))), 1e-6);
  EXPECT_LE(ls.residual_norm, 1e-8);

  const Vector a = testkit::random_vector(gen, p);
  const double b = a.dot(ls.theta) - 1.0;  // binding for the <= solve
  LinearConstraint eq{a, b, ConstraintSense::equality};
  const KktSolution se = sys.solve_eq(eq);
  OracleProblem op = base;
  op.constraint = eq;
  EXPECT_LT(testkit::relative_gap(se.sse, testkit::oracle_objective(op, testkit::oracle_solve(op))), 1e-6);
  EXPECT_NEAR(a.dot(se.theta), b, 1e-8 * std::max(1.0, std::abs(b)));
  // Stationarity in the documented convention.
  const Vector stat = sys.gram() * se.theta - sys.xty() + se.multiplier * a;
  EXPECT_LT(stat.lpNorm<Eigen::Infinity>(), 1e-7 * std::max(1.0, sys.xty().lpNorm<Eigen::Infinity>()));

  LinearConstraint le{a, b, ConstraintSense::le};
  const KktSolution si = sys.solve_ineq(le);
  EXPECT_TRUE(si.constraint_active);
  EXPECT_GE(si.multiplier, 0.0);
  EXPECT_NEAR(si.sse, se.sse, 1e-9 * se.sse);
  LinearConstraint loose{a, a.dot(ls.theta) + 1.0, ConstraintSense::le};
  const KktSolution slack = sys.solve_ineq(loose);
  EXPECT_FALSE(slack.constraint_active);
  EXPECT_EQ(slack.multiplier, 0.0);
  EXPECT_LE((slack.theta - ls.theta).lpNorm<Eigen::Infinity>(), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Instances, RandomSolves, ::testing::Range(0, 10));

TEST(Properties, TighterBoundNeverLowersSse) {
  std::mt19937_64 gen(77);
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = testkit::random_ls_instance(gen);
    LeastSquaresSystem sys(inst.x, inst.y);
    const Vector a = testkit::random_vector(gen, inst.x.cols());
    const double top = a.dot(sys.solve().theta) + 2.0;
    double prev = -1.0;
    for (double b = top; b > top - 8.0; b -= 0.5) {
      const double s = sys.solve_ineq({a, b, ConstraintSense::le}).sse;
      EXPECT_GE(s, prev - 1e-9 * std::max(1.0, prev));
      prev = s;
    }
  }
}

TEST(Properties, RankOnePenaltyTradeoffIsMonotone) {
  std::mt19937_64 gen(78);
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = testkit::random_ls_instance(gen);
    LeastSquaresSystem sys(inst.x, inst.y);
    const Vector d = testkit::random_vector(gen, inst.x.cols());
    const double r0 = 3.0;
    double prev_sse = -1.0, prev_pen = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4}) {
      const KktSolution s = sys.solve_rank1_penalty(d, r0, lambda);
      const double gap = r0 - d.dot(s.theta);
      EXPECT_GE(s.sse, prev_sse - 1e-9 * std::max(1.0, prev_sse));
      EXPECT_LE(gap * gap, prev_pen * (1 + 1e-9) + 1e-15);
      prev_sse = s.sse;
      prev_pen = gap * gap;
    }
  }
}

TEST(Properties, LinearPenaltyIsAffineInLambda) {
  std::mt19937_64 gen(79);
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = testkit::random_ls_instance(gen);
    LeastSquaresSystem sys(inst.x, inst.y);
    const Vector a = testkit::random_vector(gen, inst.x.cols());
    const Vector t1 = sys.solve_linear_penalty(a, 2.0).theta;
    const Vector t2 = sys.solve_linear_penalty(a, 30.0).theta;
    const Vector mid = sys.solve_linear_penalty(a, 16.0).theta;
    EXPECT_LT((t1 + t2 - 2.0 * mid).lpNorm<Eigen::Infinity>(), 1e-9 * std::max(1.0, mid.lpNorm<Eigen::Infinity>()));
    EXPECT_LT((sys.solve_linear_penalty(a, 0.0).theta - sys.solve().theta).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Properties, SseMatchesReportedObjective) {
  std::mt19937_64 gen(80);
  const auto inst = testkit::random_ls_instance(gen);
  const KktSolution s = solve_ls(inst.x, inst.y);
  EXPECT_NEAR(s.sse, sse(inst.x, inst.y, s.theta), 1e-9 * s.sse);
}
