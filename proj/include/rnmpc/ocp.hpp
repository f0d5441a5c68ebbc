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

#ifndef RNMPC_OCP_HPP_
#define RNMPC_OCP_HPP_

/**
 * @file
 * @brief Condensed (single-shooting) form of the finite-horizon OCP.
 *
 * The states are eliminated by forward simulation, leaving U = (u(0), ..., u(N-1)) as the
 * only decision variable:
 *
 *   min_U V(x0, U)   s.t.   G(x0, U) <= 0.
 *
 * Constraint rows are frozen in the following order:
 *   1. input rows on u(0)               (q_U rows, linear in u(0) only)
 *   2. input rows on u(1), ..., u(N-1)  (by time)
 *   3. state rows on x(1), ..., x(N-1)  (by time)
 *   4. one terminal row x(N)' P x(N) - alpha
 * Putting u(0) first is what lets the saturated subset be read off the leading rows.
 */

#include <rnmpc/core.hpp>
#include <rnmpc/model.hpp>

#include <vector>

namespace rnmpc {

enum class RowKind { Input, State, Terminal };

struct RowTag {
  RowKind kind;
  int stage;  ///< time index k of u(k) or x(k)
  int row;    ///< row within the polytope (0 for the terminal row)
};

class OCPInstance {
public:
  /// The model must outlive the instance.
  OCPInstance(const SystemModel& model, Vector x0) : model_(&model), x0_(std::move(x0)) {
    detail::require_dim(x0_.size(), model.state_dim, "OCPInstance: x0");
    const int N = model.horizon;
    for (int k = 0; k < N; ++k)
      for (int r = 0; r < model.input_rows(); ++r) tags_.push_back({RowKind::Input, k, r});
    for (int k = 1; k < N; ++k)
      for (int r = 0; r < model.state_rows(); ++r) tags_.push_back({RowKind::State, k, r});
    tags_.push_back({RowKind::Terminal, N, 0});
  }

  [[nodiscard]] const SystemModel& model() const { return *model_; }
  [[nodiscard]] const Vector& x0() const { return x0_; }
  [[nodiscard]] int horizon() const { return model_->horizon; }
  [[nodiscard]] int decision_dim() const { return model_->horizon * model_->input_dim; }
  [[nodiscard]] int constraint_count() const { return static_cast<int>(tags_.size()); }
  [[nodiscard]] int input_rows() const { return model_->input_rows(); }
  [[nodiscard]] const std::vector<RowTag>& index_map() const { return tags_; }
  [[nodiscard]] int terminal_row() const { return constraint_count() - 1; }

  /// x(0) is data; its state constraint is a feasibility precheck rather than a constant row.
  [[nodiscard]] bool initial_state_admissible() const {
    return model_->state_polytope.rows() == 0 || model_->state_polytope.contains(x0_);
  }

  /// u(k) slice of U.
  [[nodiscard]] Vector input(const Vector& U, int k) const {
    return U.segment(static_cast<Eigen::Index>(k) * model_->input_dim, model_->input_dim);
  }

private:
  const SystemModel* model_;
  Vector x0_;
  std::vector<RowTag> tags_;
};

/// Everything an SQP iteration needs at one U.
struct Linearization {
  std::vector<Vector> states;  ///< x(0), ..., x(N)
  double cost = 0.0;
  Vector cost_gradient;
  Matrix cost_hessian_gn;     ///< Gauss-Newton curvature of V
  Vector constraints;
  Matrix constraint_jacobian;
  Matrix terminal_curvature;  ///< 2 S_N' P S_N, curvature of the terminal row without f''
};

inline std::vector<Vector> rollout_states(const OCPInstance& ocp, const Vector& U) {
  detail::require_dim(U.size(), ocp.decision_dim(), "rollout: U");
  const SystemModel& model = ocp.model();
  std::vector<Vector> xs;
  xs.reserve(static_cast<std::size_t>(ocp.horizon()) + 1);
  xs.push_back(ocp.x0());
  for (int k = 0; k < ocp.horizon(); ++k) xs.push_back(model.dynamics(xs.back(), ocp.input(U, k)));
  return xs;
}

/// Stacked X = (x(1), ..., x(N)).
inline Vector rollout(const OCPInstance& ocp, const Vector& U) {
  const auto xs = rollout_states(ocp, U);
  const int n = ocp.model().state_dim;
  Vector X(static_cast<Eigen::Index>(ocp.horizon()) * n);
  for (int k = 1; k <= ocp.horizon(); ++k) X.segment((k - 1) * n, n) = xs[static_cast<std::size_t>(k)];
  return X;
}

inline Linearization linearize(const OCPInstance& ocp, const Vector& U) {
  detail::require_dim(U.size(), ocp.decision_dim(), "linearize: U");
  const SystemModel& model = ocp.model();
  const int n = model.state_dim;
  const int m = model.input_dim;
  const int N = ocp.horizon();
  const int nu = ocp.decision_dim();
  const Matrix& P = model.terminal.P;

  Linearization lin;
  lin.states = rollout_states(ocp, U);
  lin.cost_gradient = Vector::Zero(nu);
  lin.cost_hessian_gn = Matrix::Zero(nu, nu);
  lin.constraints.resize(ocp.constraint_count());
  lin.constraint_jacobian = Matrix::Zero(ocp.constraint_count(), nu);

  // S = dx(k)/dU, propagated forward; S(0) = 0.
  Matrix S = Matrix::Zero(n, nu);
  int row = 0;
  std::vector<Matrix> sens(static_cast<std::size_t>(N) + 1);
  sens[0] = S;
  for (int k = 0; k < N; ++k) {
    const Vector& x = lin.states[static_cast<std::size_t>(k)];
    const Vector u = ocp.input(U, k);
    const Vector Qx = model.Q * x;
    const Vector Ru = model.R * u;
    lin.cost += x.dot(Qx) + u.dot(Ru);
    lin.cost_gradient.noalias() += 2.0 * S.transpose() * Qx;
    lin.cost_gradient.segment(k * m, m) += 2.0 * Ru;
    lin.cost_hessian_gn.noalias() += 2.0 * S.transpose() * model.Q * S;
    lin.cost_hessian_gn.block(k * m, k * m, m, m) += 2.0 * model.R;

    const auto [Jx, Ju] = model.jacobians(x, u);
    Matrix next = Jx * S;
    next.middleCols(k * m, m) += Ju;
    S = std::move(next);
    sens[static_cast<std::size_t>(k) + 1] = S;
  }

  // Input rows, all stages; u(0) rows come first.
  const Polytope& Upoly = model.input_polytope;
  for (int k = 0; k < N; ++k) {
    lin.constraints.segment(row, Upoly.rows()) = Upoly.A * ocp.input(U, k) - Upoly.b;
    lin.constraint_jacobian.block(row, k * m, Upoly.rows(), m) = Upoly.A;
    row += static_cast<int>(Upoly.rows());
  }
  const Polytope& Xpoly = model.state_polytope;
  for (int k = 1; k < N; ++k) {
    if (Xpoly.rows() == 0) break;
    lin.constraints.segment(row, Xpoly.rows()) = Xpoly.A * lin.states[static_cast<std::size_t>(k)] - Xpoly.b;
    lin.constraint_jacobian.middleRows(row, Xpoly.rows()) = Xpoly.A * sens[static_cast<std::size_t>(k)];
    row += static_cast<int>(Xpoly.rows());
  }

  const Vector& xN = lin.states.back();
  const Vector PxN = P * xN;
  lin.cost += xN.dot(PxN);
  lin.cost_gradient.noalias() += 2.0 * S.transpose() * PxN;
  lin.terminal_curvature = 2.0 * S.transpose() * P * S;
  lin.cost_hessian_gn += lin.terminal_curvature;

  lin.constraints[row] = xN.dot(PxN) - model.terminal.alpha;
  lin.constraint_jacobian.row(row) = 2.0 * PxN.transpose() * S;
  return lin;
}

/**
 * Exact Hessian of L(U) = V(U) + lambda' G(U) for the condensed problem using the model's
 * second derivatives: one forward sensitivity pass and one backward costate pass,
 *
 *   p_N = (2 + 2 lambda_T) P x_N,   p_k = 2 Q x_k + Hx' lambda_k + f_x' p_{k+1},
 *   hess L = sum_k [S_k; E_k]' [[2Q + p_{k+1}.f_xx, p_{k+1}.f_xu], [., 2R + p_{k+1}.f_uu]] [S_k; E_k]
 *            + (2 + 2 lambda_T) S_N' P S_N.
 * Input rows are linear in U and contribute no curvature.
 */
inline Matrix lagrangian_hessian_exact(const OCPInstance& ocp, const Vector& U, const Vector& lambda) {
  const SystemModel& model = ocp.model();
  detail::require(static_cast<bool>(model.second_derivatives), "model has no second derivatives");
  detail::require_dim(lambda.size(), ocp.constraint_count(), "lagrangian_hessian_exact: lambda");
  const int n = model.state_dim;
  const int m = model.input_dim;
  const int N = ocp.horizon();
  const int nu = ocp.decision_dim();
  const auto xs = rollout_states(ocp, U);

  std::vector<Matrix> A(static_cast<std::size_t>(N));
  std::vector<Matrix> S(static_cast<std::size_t>(N) + 1);
  S[0] = Matrix::Zero(n, nu);
  for (int k = 0; k < N; ++k) {
    auto [Jx, Ju] = model.jacobians(xs[static_cast<std::size_t>(k)], ocp.input(U, k));
    Matrix next = Jx * S[static_cast<std::size_t>(k)];
    next.middleCols(k * m, m) += Ju;
    S[static_cast<std::size_t>(k) + 1] = std::move(next);
    A[static_cast<std::size_t>(k)] = std::move(Jx);
  }

  const int q_inputs = N * model.input_rows();
  const int xr = model.state_rows();
  const double terminal_weight = 2.0 + 2.0 * lambda[ocp.terminal_row()];
  const Matrix& P = model.terminal.P;

  Matrix hess = terminal_weight * S[static_cast<std::size_t>(N)].transpose() * P * S[static_cast<std::size_t>(N)];
  Vector p = terminal_weight * P * xs.back();  // costate of x(k+1)
  for (int k = N - 1; k >= 0; --k) {
    const Vector& x = xs[static_cast<std::size_t>(k)];
    const WeightedHessian w = model.second_derivatives(x, ocp.input(U, k), p);
    const Matrix& Sk = S[static_cast<std::size_t>(k)];
    Matrix Hxx = 2.0 * model.Q + w.xx;
    // [S; E]' M [S; E], with E selecting u(k)
    hess.noalias() += Sk.transpose() * Hxx * Sk;
    const Matrix cross = Sk.transpose() * w.xu;  // nu x m
    hess.middleCols(k * m, m) += cross;
    hess.middleRows(k * m, m) += cross.transpose();
    hess.block(k * m, k * m, m, m) += 2.0 * model.R + w.uu;

    Vector lx = 2.0 * model.Q * x;
    if (k >= 1 && xr > 0)
      lx.noalias() += model.state_polytope.A.transpose() * lambda.segment(q_inputs + (k - 1) * xr, xr);
    p = lx + A[static_cast<std::size_t>(k)].transpose() * p;
  }
  return 0.5 * (hess + hess.transpose());
}

/// V(x0, U) and its gradient.
inline std::pair<double, Vector> eval_cost(const OCPInstance& ocp, const Vector& U) {
  Linearization lin = linearize(ocp, U);
  return {lin.cost, std::move(lin.cost_gradient)};
}

/// G(x0, U) and dG/dU in the frozen row order.
inline std::pair<Vector, Matrix> eval_constraints(const OCPInstance& ocp, const Vector& U) {
  Linearization lin = linearize(ocp, U);
  return {std::move(lin.constraints), std::move(lin.constraint_jacobian)};
}

/// Cheap cost-only evaluation for line searches and oracles.
inline double cost_value(const OCPInstance& ocp, const Vector& U) {
  const SystemModel& model = ocp.model();
  Vector x = ocp.x0();
  double v = 0.0;
  for (int k = 0; k < ocp.horizon(); ++k) {
    const Vector u = ocp.input(U, k);
    v += x.dot(model.Q * x) + u.dot(model.R * u);
    x = model.dynamics(x, u);
  }
  return v + model.terminal.value(x);
}

/// Constraint values without derivatives.
inline Vector constraint_values(const OCPInstance& ocp, const Vector& U) {
  const SystemModel& model = ocp.model();
  const auto xs = rollout_states(ocp, U);
  Vector G(ocp.constraint_count());
  int row = 0;
  const Polytope& Upoly = model.input_polytope;
  for (int k = 0; k < ocp.horizon(); ++k) {
    G.segment(row, Upoly.rows()) = Upoly.A * ocp.input(U, k) - Upoly.b;
    row += static_cast<int>(Upoly.rows());
  }
  const Polytope& Xpoly = model.state_polytope;
  for (int k = 1; k < ocp.horizon() && Xpoly.rows() > 0; ++k) {
    G.segment(row, Xpoly.rows()) = Xpoly.A * xs[static_cast<std::size_t>(k)] - Xpoly.b;
    row += static_cast<int>(Xpoly.rows());
  }
  G[row] = model.terminal.value(xs.back()) - model.terminal.alpha;
  return G;
}

}  // namespace rnmpc

#endif  // RNMPC_OCP_HPP_
