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

#include <rnmpc/ocp.hpp>

#include <gtest/gtest.h>

#include <random>

namespace rnmpc {
namespace {

class OcpTest : public ::testing::Test {
protected:
  SystemModel model = builtin_example_model();
};

TEST_F(OcpTest, Dimensions) {
  const OCPInstance ocp(model, Eigen::Vector2d(1, 2));
  EXPECT_EQ(ocp.decision_dim(), 3);
  // 3 x 2 input rows, 2 x 4 state rows, 1 terminal row.
  EXPECT_EQ(ocp.constraint_count(), 15);
  EXPECT_EQ(ocp.terminal_row(), 14);
  const auto& tags = ocp.index_map();
  EXPECT_EQ(tags[0].kind, RowKind::Input);
  EXPECT_EQ(tags[0].stage, 0);
  EXPECT_EQ(tags[1].stage, 0);
  EXPECT_EQ(tags[2].stage, 1);
  EXPECT_EQ(tags[6].kind, RowKind::State);
  EXPECT_EQ(tags[6].stage, 1);
  EXPECT_EQ(tags[14].kind, RowKind::Terminal);
}

TEST_F(OcpTest, RolloutAtEquilibrium) {
  const OCPInstance ocp(model, Vector::Zero(2));
  EXPECT_EQ(rollout(ocp, Vector::Zero(3)), Vector::Zero(6));
}

TEST_F(OcpTest, RolloutMatchesOracle) {
  const OCPInstance ocp(model, Eigen::Vector2d(1, 2));
  const Vector X = rollout(ocp, Eigen::Vector3d(0.5, 0, 0));
  const Vector expected = (Vector(6) << 1.5, 1.925, 1.5, 1.7325, 1.5, 1.55925).finished();
  EXPECT_LE((X - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST_F(OcpTest, RolloutRejectsWrongLength) {
  const OCPInstance ocp(model, Eigen::Vector2d(1, 2));
  EXPECT_THROW(rollout(ocp, Vector::Zero(2)), ContractViolation);
  EXPECT_THROW(OCPInstance(model, Vector::Zero(3)), ContractViolation);
}

TEST_F(OcpTest, CostAtEquilibrium) {
  const OCPInstance ocp(model, Vector::Zero(2));
  const auto [V, g] = eval_cost(ocp, Vector::Zero(3));
  EXPECT_EQ(V, 0.0);
  EXPECT_EQ(g, Vector::Zero(3));
}

TEST_F(OcpTest, CostMatchesOracle) {
  // tests/oracles/example_values.py: V((1,2), U=0) = 39.24869492
  const OCPInstance ocp(model, Eigen::Vector2d(1, 2));
  EXPECT_NEAR(eval_cost(ocp, Vector::Zero(3)).first, 39.24869492, 1e-10);
  EXPECT_NEAR(cost_value(ocp, Vector::Zero(3)), 39.24869492, 1e-10);
}

double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

TEST_F(OcpTest, DerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> xs(-4.0, 4.0), us(-1.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const OCPInstance ocp(model, Eigen::Vector2d(xs(rng), xs(rng)));
    const Vector U = Eigen::Vector3d(us(rng), us(rng), us(rng));
    const auto [V, g] = eval_cost(ocp, U);
    const auto [G, J] = eval_constraints(ocp, U);
    Vector g_fd(3);
    Matrix J_fd(G.size(), 3);
    for (int i = 0; i < 3; ++i) {
      Vector up = U, um = U;
      up[i] += h;
      um[i] -= h;
      g_fd[i] = (cost_value(ocp, up) - cost_value(ocp, um)) / (2 * h);
      J_fd.col(i) = (constraint_values(ocp, up) - constraint_values(ocp, um)) / (2 * h);
    }
    EXPECT_LE(rel_err(g, g_fd), 1e-5) << "trial " << trial;
    EXPECT_LE(rel_err(J, J_fd), 1e-5) << "trial " << trial;
    EXPECT_NEAR(V, cost_value(ocp, U), 1e-12 * std::max(1.0, V));
    EXPECT_LE((G - constraint_values(ocp, U)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(OcpTest, InputRowsOfFirstStage) {
  const OCPInstance ocp(model, Eigen::Vector2d(0.5, 0.5));
  const Vector Gp = constraint_values(ocp, Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(Gp[0], -2.0);
  EXPECT_EQ(Gp[1], 0.0);
  const Vector Gm = constraint_values(ocp, Eigen::Vector3d(-1, 0, 0));
  EXPECT_EQ(Gm[0], 0.0);
  EXPECT_EQ(Gm[1], -2.0);
}

TEST_F(OcpTest, TerminalRowIsTerminalSetValue) {
  const OCPInstance ocp(model, Eigen::Vector2d(0.3, -0.2));
  const Vector U = Eigen::Vector3d(0.1, -0.2, 0.05);
  const Vector X = rollout(ocp, U);
  const Vector xN = X.tail(2);
  EXPECT_NEAR(constraint_values(ocp, U)[14], xN.dot(model.terminal.P * xN) - 1.1, 1e-15);
}

TEST_F(OcpTest, FirstInputRowsDependOnlyOnFirstInput) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> xs(-5.0, 5.0), us(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double u0 = us(rng);
    const OCPInstance a(model, Eigen::Vector2d(xs(rng), xs(rng)));
    const OCPInstance b(model, Eigen::Vector2d(xs(rng), xs(rng)));
    const Vector Ga = constraint_values(a, Eigen::Vector3d(u0, us(rng), us(rng)));
    const Vector Gb = constraint_values(b, Eigen::Vector3d(u0, us(rng), us(rng)));
    EXPECT_EQ(Ga[0], Gb[0]);
    EXPECT_EQ(Ga[1], Gb[1]);
    const auto J = eval_constraints(a, Eigen::Vector3d(u0, 0.3, -0.3)).second;
    EXPECT_EQ(J(0, 1), 0.0);
    EXPECT_EQ(J(0, 2), 0.0);
    EXPECT_EQ(J(1, 1), 0.0);
    EXPECT_EQ(J(1, 2), 0.0);
  }
}

TEST_F(OcpTest, CostIsPositiveDefinite) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> xs(-5.0, 5.0), us(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const OCPInstance ocp(model, Eigen::Vector2d(xs(rng), xs(rng)));
    EXPECT_GT(cost_value(ocp, Eigen::Vector3d(us(rng), us(rng), us(rng))), 0.0);
  }
  const OCPInstance origin(model, Vector::Zero(2));
  EXPECT_GT(cost_value(origin, Eigen::Vector3d(1e-4, 0, 0)), 0.0);
}

TEST_F(OcpTest, ExactLagrangianHessianMatchesDifferencedGradient) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> xs(-3.0, 3.0), us(-1.0, 1.0), ls(0.0, 2.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const OCPInstance ocp(model, Eigen::Vector2d(xs(rng), xs(rng)));
    const Vector U = Eigen::Vector3d(us(rng), us(rng), us(rng));
    Vector lambda(15);
    for (int i = 0; i < 15; ++i) lambda[i] = ls(rng);
    auto grad = [&](const Vector& V) {
      const auto [c, g] = eval_cost(ocp, V);
      return Vector(g + eval_constraints(ocp, V).second.transpose() * lambda);
    };
    Matrix fd(3, 3);
    for (int i = 0; i < 3; ++i) {
      Vector up = U, um = U;
      up[i] += h;
      um[i] -= h;
      fd.col(i) = (grad(up) - grad(um)) / (2 * h);
    }
    EXPECT_LE(rel_err(lagrangian_hessian_exact(ocp, U, lambda), fd), 1e-6) << "trial " << trial;
  }
}

}  // namespace
}  // namespace rnmpc
