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

#include <rnmpc/model.hpp>

#include <gtest/gtest.h>

#include <random>

namespace rnmpc {
namespace {

TEST(Dynamics, EquilibriumAtOrigin) {
  const auto model = builtin_example_model();
  EXPECT_EQ(eval_dynamics(model, Vector::Zero(2), Vector::Zero(1)), Vector::Zero(2));
}

TEST(Dynamics, HandEvaluatedSteps) {
  const auto model = builtin_example_model();
  const Vector a = eval_dynamics(model, Eigen::Vector2d(1, 2), Vector::Constant(1, 0.5));
  EXPECT_DOUBLE_EQ(a[0], 1.5);
  EXPECT_DOUBLE_EQ(a[1], 1.925);
  const Vector b = eval_dynamics(model, Eigen::Vector2d(3, 4), Vector::Constant(1, -1.0));
  EXPECT_DOUBLE_EQ(b[0], 2.0);
  EXPECT_DOUBLE_EQ(b[1], 2.6);
}

TEST(Dynamics, DimensionMismatchThrows) {
  const auto model = builtin_example_model();
  EXPECT_THROW(eval_dynamics(model, Vector::Zero(3), Vector::Zero(1)), ContractViolation);
  EXPECT_THROW(eval_dynamics(model, Vector::Zero(2), Vector::Zero(2)), ContractViolation);
  EXPECT_THROW(eval_jacobians(model, Vector::Zero(1), Vector::Zero(1)), ContractViolation);
}

TEST(Jacobians, AnalyticValues) {
  const auto model = builtin_example_model();
  const auto [Jx0, Ju0] = eval_jacobians(model, Eigen::Vector2d(0.4, -2.0), Vector::Zero(1));
  EXPECT_EQ(Ju0, Eigen::Vector2d(1.0, 0.0));
  const auto [Jx, Ju] = eval_jacobians(model, Eigen::Vector2d(5.0, 1.0), Vector::Constant(1, 0.7));
  Matrix expected(2, 2);
  expected << 1.0, 0.0, 0.0, 0.9;
  EXPECT_EQ(Jx, expected);
  EXPECT_EQ(Jx0, expected);
  EXPECT_DOUBLE_EQ(Ju(1, 0), 3.0 * 0.49);
}

double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

TEST(Jacobians, MatchCentralDifferencesAtFixedPoint) {
  const auto model = builtin_example_model();
  const Vector x = Eigen::Vector2d(0.3, -0.7);
  const Vector u = Vector::Constant(1, 0.2);
  const auto fd = finite_difference_jacobians(model.dynamics, 1e-6)(x, u);
  const auto [Jx, Ju] = eval_jacobians(model, x, u);
  EXPECT_LE(rel_err(Jx, fd.first), 1e-5);
  EXPECT_LE(rel_err(Ju, fd.second), 1e-5);
}

TEST(Jacobians, MatchCentralDifferencesAtRandomPoints) {
  const auto model = builtin_example_model();
  const auto fd = finite_difference_jacobians(model.dynamics, 1e-6);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xs(-10.0, 10.0), us(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vector x = Eigen::Vector2d(xs(rng), xs(rng));
    const Vector u = Vector::Constant(1, us(rng));
    const auto [Jx, Ju] = eval_jacobians(model, x, u);
    const auto [Fx, Fu] = fd(x, u);
    EXPECT_LE(rel_err(Jx, Fx), 1e-5);
    EXPECT_LE(rel_err(Ju, Fu), 1e-5);
  }
}

TEST(Jacobians, SecondDerivativesMatchDifferencedJacobians) {
  const auto model = builtin_example_model();
  const Vector x = Eigen::Vector2d(0.5, 1.5);
  const Vector u = Vector::Constant(1, -0.6);
  const Vector w = Eigen::Vector2d(0.7, -1.3);
  const double h = 1e-6;
  const auto plus = eval_jacobians(model, x, u + Vector::Constant(1, h)).second;
  const auto minus = eval_jacobians(model, x, u - Vector::Constant(1, h)).second;
  const double uu = w.dot((plus - minus).col(0)) / (2 * h);
  EXPECT_NEAR(model.second_derivatives(x, u, w).uu(0, 0), uu, 1e-6);
}

TEST(BuiltinModel, Parameters) {
  const auto model = builtin_example_model();
  EXPECT_EQ(model.state_dim, 2);
  EXPECT_EQ(model.input_dim, 1);
  EXPECT_EQ(model.input_rows(), 2);
  EXPECT_EQ(model.horizon, 3);
  EXPECT_DOUBLE_EQ(model.terminal.alpha, 1.1);
  EXPECT_DOUBLE_EQ(model.terminal.P(1, 1), 10.53);
  // Row order: -u <= 1, then u <= 1.
  EXPECT_DOUBLE_EQ(model.input_polytope.A(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(model.input_polytope.A(1, 0), 1.0);
  EXPECT_EQ(model.state_rows(), 4);
  EXPECT_NO_THROW(validate_model(model));
}

TEST(BuiltinModel, TerminalSetMembership) {
  const auto model = builtin_example_model();
  EXPECT_TRUE(model.terminal.contains(Eigen::Vector2d(0, 0)));
  EXPECT_DOUBLE_EQ(model.terminal.value(Eigen::Vector2d(1, 0)), 4.0);
  EXPECT_FALSE(model.terminal.contains(Eigen::Vector2d(1, 0)));
}

TEST(Validation, RejectsBrokenModels) {
  auto bad_q = builtin_example_model();
  bad_q.Q(1, 1) = -1.0;
  EXPECT_THROW(validate_model(bad_q), ContractViolation);

  auto bad_w = builtin_example_model();
  bad_w.input_polytope.b[0] = 0.0;
  EXPECT_THROW(validate_model(bad_w), ContractViolation);

  auto bad_alpha = builtin_example_model();
  bad_alpha.terminal.alpha = 0.0;
  EXPECT_THROW(validate_model(bad_alpha), ContractViolation);

  auto shifted = builtin_example_model();
  shifted.dynamics = [](const Vector& x, const Vector& u) { return Vector(x + Vector::Constant(2, 1e-3 + u[0])); };
  EXPECT_THROW(validate_model(shifted), ContractViolation);
}

TEST(Serialization, RoundTripKeepsHash) {
  const auto model = builtin_example_model();
  const auto again = model_from_json(model_to_json(model));
  EXPECT_EQ(model_hash(model), model_hash(again));
  EXPECT_EQ(again.family, "pannocchia2011");
  EXPECT_EQ(again.terminal.P, model.terminal.P);
}

TEST(Serialization, HashChangesWithParameters) {
  auto j = model_to_json(builtin_example_model());
  j["alpha"] = 1.2;
  EXPECT_NE(model_hash(model_from_json(j)), model_hash(builtin_example_model()));
}

TEST(Serialization, MalformedInputIsFormatError) {
  auto j = model_to_json(builtin_example_model());
  j["family"] = "no-such-family";
  EXPECT_THROW(model_from_json(j), FormatError);
  j = model_to_json(builtin_example_model());
  j.erase("Q");
  EXPECT_THROW(model_from_json(j), FormatError);
  EXPECT_THROW(resolve_model("builtin:unknown"), FormatError);
}

TEST(FiniteDifferenceFallback, ReproducesAnalyticJacobians) {
  auto model = builtin_example_model();
  model.jacobians = finite_difference_jacobians(model.dynamics);
  const auto [Jx, Ju] = eval_jacobians(model, Eigen::Vector2d(1, 1), Vector::Constant(1, 0.5));
  EXPECT_NEAR(Ju(1, 0), 0.75, 1e-8);
  EXPECT_NEAR(Jx(1, 1), 0.9, 1e-8);
}

}  // namespace
}  // namespace rnmpc
