// Copyright 2026 The rnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <rnmpc/sqp.hpp>

#include "brute_force_oracle.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

namespace rnmpc {
namespace {

class SqpTest : public ::testing::Test {
protected:
  SystemModel model = builtin_example_model();

  void expect_certificate(const OCPInstance& ocp, const NLPSolution& sol) {
    ASSERT_TRUE(sol.converged());
    EXPECT_LE(sol.kkt_residual, 1e-8);
    EXPECT_LE(kkt_residual(ocp, sol.U_star, sol.lambda_star), 1e-8);
    EXPECT_GE(sol.lambda_star.minCoeff(), -1e-10);
    const Vector G = constraint_values(ocp, sol.U_star);
    EXPECT_LE(G.cwiseProduct(sol.lambda_star).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(sol.V_star, cost_value(ocp, sol.U_star), 1e-12 * std::max(1.0, sol.V_star));
  }
};

TEST_F(SqpTest, Origin) {
  const OCPInstance ocp(model, Vector::Zero(2));
  const auto sol = solve_ocp(ocp);
  expect_certificate(ocp, sol);
  EXPECT_LE(sol.U_star.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(sol.lambda_star.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(sol.V_star, 1e-20);
  const auto info = classify_active_sets(ocp, sol);
  EXPECT_TRUE(info.active.empty());
  EXPECT_TRUE(check_region_regularity(ocp, sol, info));
}

TEST_F(SqpTest, SaturatedStateThreeFour) {
  const OCPInstance ocp(model, Eigen::Vector2d(3, 4));
  const auto sol = solve_ocp(ocp);
  expect_certificate(ocp, sol);
  EXPECT_NEAR(sol.feedback(1)[0], -1.0, 1e-12);
  // tests/oracles/example_values.py: V* = 42.00245108 at U = (-1, -1, -1)
  EXPECT_NEAR(sol.V_star, 42.00245108, 1e-7);
  const auto info = classify_active_sets(ocp, sol);
  EXPECT_NE(std::find(info.active.begin(), info.active.end(), 0), info.active.end());
  EXPECT_TRUE(check_region_regularity(ocp, sol, info));
}

TEST_F(SqpTest, MatchesFrozenOracleValues) {
  // Refined brute-force values from tests/oracles/example_values.py.
  const OCPInstance a(model, Eigen::Vector2d(0.1, 0.0));
  const auto sa = solve_ocp(a);
  expect_certificate(a, sa);
  EXPECT_NEAR(sa.V_star, 0.016216785869, 1e-9);
}

TEST_F(SqpTest, InfeasibleStateNearTheSet) {
  // Neither the grid oracle nor a local refinement finds a feasible U at (1, -1).
  EXPECT_FALSE(testing::brute_force_ocp(1.0, -1.0).feasible);
  const OCPInstance ocp(model, Eigen::Vector2d(1.0, -1.0));
  EXPECT_EQ(solve_ocp(ocp).status, SolveStatus::Infeasible);
}

TEST_F(SqpTest, FarStateIsInfeasible) {
  const OCPInstance far(model, Eigen::Vector2d(100, 100));
  EXPECT_EQ(solve_ocp(far).status, SolveStatus::Infeasible);
  EXPECT_FALSE(is_feasible(far));
  const OCPInstance outside(model, Eigen::Vector2d(5, 0));
  EXPECT_EQ(solve_ocp(outside).status, SolveStatus::Infeasible);
}

TEST_F(SqpTest, WarmStartLengthChecked) {
  const OCPInstance ocp(model, Vector::Zero(2));
  EXPECT_THROW(solve_ocp(ocp, Vector::Zero(2)), ContractViolation);
}

TEST_F(SqpTest, MatchesBruteForceOracleOnRandomFeasibleStates) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> x1(-3.5, 3.5), x2(-4.2, 4.2);
  int checked = 0;
  while (checked < 20) {
    const double a = x1(rng), b = x2(rng);
    const auto oracle = testing::brute_force_ocp(a, b);
    if (!oracle.feasible) continue;
    const OCPInstance ocp(model, Eigen::Vector2d(a, b));
    const auto sol = solve_ocp(ocp);
    expect_certificate(ocp, sol);
    EXPECT_NEAR(sol.V_star, oracle.cost, 1e-3) << "x0 = (" << a << ", " << b << ")";
    ++checked;
  }
}

TEST_F(SqpTest, FeasibilityProbeAgreesWithSolver) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> x1(-4.0, 4.0), x2(-5.0, 5.0);
  for (int k = 0; k < 300; ++k) {
    const OCPInstance ocp(model, Eigen::Vector2d(x1(rng), x2(rng)));
    EXPECT_EQ(is_feasible(ocp), solve_ocp(ocp).converged()) << ocp.x0().transpose();
  }
}

TEST_F(SqpTest, KktResidualDetectsPerturbation) {
  const OCPInstance zero(model, Vector::Zero(2));
  EXPECT_EQ(kkt_residual(zero, Vector::Zero(3), Vector::Zero(15)), 0.0);
  for (const Vector& x0 : {Vector(Eigen::Vector2d(0.5, -0.3)), Vector(Eigen::Vector2d(3, 4))}) {
    const OCPInstance ocp(model, x0);
    const auto sol = solve_ocp(ocp);
    ASSERT_TRUE(sol.converged());
    for (int i = 0; i < 3; ++i) {
      Vector U = sol.U_star;
      U[i] += 1e-3;
      EXPECT_GT(kkt_residual(ocp, U, sol.lambda_star), 0.0);
    }
  }
}

TEST_F(SqpTest, ClassificationPartitions) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> x1(-3.5, 3.5), x2(-4.2, 4.2);
  int solved = 0;
  for (int k = 0; k < 200 && solved < 40; ++k) {
    const OCPInstance ocp(model, Eigen::Vector2d(x1(rng), x2(rng)));
    const auto sol = solve_ocp(ocp);
    if (!sol.converged()) continue;
    ++solved;
    const auto info = classify_active_sets(ocp, sol);
    IndexSet all = info.active;
    all.insert(all.end(), info.inactive.begin(), info.inactive.end());
    std::sort(all.begin(), all.end());
    IndexSet expected(15);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(all, expected);
    IndexSet split = info.weak;
    split.insert(split.end(), info.strong.begin(), info.strong.end());
    std::sort(split.begin(), split.end());
    EXPECT_EQ(split, info.active);
  }
  EXPECT_GT(solved, 10);
}

TEST_F(SqpTest, ZeroMultiplierOnActiveRowIsWeak) {
  const OCPInstance ocp(model, Eigen::Vector2d(3, 4));
  auto sol = solve_ocp(ocp);
  ASSERT_TRUE(sol.converged());
  sol.lambda_star[0] = 0.0;
  const auto info = classify_active_sets(ocp, sol);
  EXPECT_NE(std::find(info.weak.begin(), info.weak.end(), 0), info.weak.end());
}

TEST_F(SqpTest, ClassificationRequiresConvergence) {
  NLPSolution bad;
  bad.status = SolveStatus::Infeasible;
  const OCPInstance ocp(model, Vector::Zero(2));
  EXPECT_THROW(classify_active_sets(ocp, bad), ContractViolation);
}

TEST_F(SqpTest, DuplicatedActiveRowIsIrregular) {
  const OCPInstance ocp(model, Eigen::Vector2d(3, 4));
  const auto sol = solve_ocp(ocp);
  ASSERT_TRUE(sol.converged());
  auto info = classify_active_sets(ocp, sol);
  ASSERT_FALSE(info.active.empty());
  info.active.push_back(info.active.front());
  EXPECT_FALSE(check_region_regularity(ocp, sol, info));
}

TEST_F(SqpTest, WarmStartDoesNotIncreaseIterations) {
  SolverOptions opt;
  Vector x = Eigen::Vector2d(3, 4);
  std::optional<Vector> warm;
  int steps = 0, no_worse = 0;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> restart_x1(-3.0, 3.0), restart_x2(-3.5, 3.5);
  while (steps < 200) {
    const OCPInstance ocp(model, x);
    const auto cold = solve_ocp(ocp, std::nullopt, opt);
    if (!cold.converged()) {
      x = Eigen::Vector2d(restart_x1(rng), restart_x2(rng));
      warm.reset();
      continue;
    }
    if (warm) {
      const auto hot = solve_ocp(ocp, warm, opt);
      ASSERT_TRUE(hot.converged());
      EXPECT_NEAR(hot.V_star, cold.V_star, 1e-8);
      no_worse += hot.iterations <= cold.iterations ? 1 : 0;
      ++steps;
    }
    Vector next = Vector::Zero(3);
    next.head(2) = cold.U_star.tail(2);
    warm = next;
    x = eval_dynamics(model, x, cold.feedback(1));
    if (x.norm() < 1e-3) {
      x = Eigen::Vector2d(restart_x1(rng), restart_x2(rng));
      warm.reset();
    }
  }
  EXPECT_GE(no_worse, 190);
}

}  // namespace
}  // namespace rnmpc
