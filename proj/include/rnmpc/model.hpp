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

#ifndef RNMPC_MODEL_HPP_
#define RNMPC_MODEL_HPP_

/**
 * @file
 * @brief Discrete-time nonlinear system x(k+1) = f(x(k), u(k)) with polytopic input/state
 * constraints, an ellipsoidal terminal set and quadratic stage/terminal weights.
 */

#include <rnmpc/core.hpp>
#include <rnmpc/json_util.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>

namespace rnmpc {

using DynamicsFn = std::function<Vector(const Vector& x, const Vector& u)>;
/// Returns (df/dx, df/du).
using JacobianFn = std::function<std::pair<Matrix, Matrix>(const Vector& x, const Vector& u)>;

/// Second derivatives of w' f(x, u) for a weight vector w: (d2/dx2, d2/dxdu, d2/du2).
struct WeightedHessian {
  Matrix xx;
  Matrix xu;
  Matrix uu;
};
using SecondDerivativeFn = std::function<WeightedHessian(const Vector& x, const Vector& u, const Vector& w)>;

/// Halfspace description { z | A z <= b }.
struct Polytope {
  Matrix A;
  Vector b;

  [[nodiscard]] Eigen::Index rows() const { return A.rows(); }
  [[nodiscard]] bool contains(const Vector& z, double tol = 0.0) const {
    return ((A * z - b).array() <= tol).all();
  }
};

/// Terminal set { x | x' P x <= alpha }. P doubles as the terminal cost weight.
struct TerminalSet {
  Matrix P;
  double alpha = 0.0;

  [[nodiscard]] double value(const Vector& x) const { return x.dot(P * x); }
  [[nodiscard]] bool contains(const Vector& x) const { return value(x) <= alpha; }
};

struct SystemModel {
  std::string family;  ///< registered dynamics family name
  Json parameters;     ///< family parameters, kept for serialization and hashing
  int state_dim = 0;
  int input_dim = 0;
  DynamicsFn dynamics;
  JacobianFn jacobians;
  SecondDerivativeFn second_derivatives;  ///< optional; finite differences are used when empty
  Polytope input_polytope;  ///< rows ordered as they appear first in the constraint vector
  Polytope state_polytope;
  TerminalSet terminal;
  Matrix Q;
  Matrix R;
  int horizon = 0;

  [[nodiscard]] int input_rows() const { return static_cast<int>(input_polytope.rows()); }
  [[nodiscard]] int state_rows() const { return static_cast<int>(state_polytope.rows()); }
};

inline Vector eval_dynamics(const SystemModel& model, const Vector& x, const Vector& u) {
  detail::require_dim(x.size(), model.state_dim, "eval_dynamics: state");
  detail::require_dim(u.size(), model.input_dim, "eval_dynamics: input");
  return model.dynamics(x, u);
}

inline std::pair<Matrix, Matrix> eval_jacobians(const SystemModel& model, const Vector& x,
                                                const Vector& u) {
  detail::require_dim(x.size(), model.state_dim, "eval_jacobians: state");
  detail::require_dim(u.size(), model.input_dim, "eval_jacobians: input");
  return model.jacobians(x, u);
}

/// Central-difference Jacobian provider for models without analytic derivatives.
inline JacobianFn finite_difference_jacobians(DynamicsFn dynamics, double step = 1e-6) {
  return [dynamics = std::move(dynamics), step](const Vector& x, const Vector& u) {
    const Vector f0 = dynamics(x, u);
    Matrix Jx(f0.size(), x.size());
    Matrix Ju(f0.size(), u.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = step * std::max(1.0, std::abs(x[i]));
      xp[i] = x[i] + h;
      const Vector fp = dynamics(xp, u);
      xp[i] = x[i] - h;
      const Vector fm = dynamics(xp, u);
      xp[i] = x[i];
      Jx.col(i) = (fp - fm) / (2.0 * h);
    }
    Vector up = u;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double h = step * std::max(1.0, std::abs(u[i]));
      up[i] = u[i] + h;
      const Vector fp = dynamics(x, up);
      up[i] = u[i] - h;
      const Vector fm = dynamics(x, up);
      up[i] = u[i];
      Ju.col(i) = (fp - fm) / (2.0 * h);
    }
    return std::pair<Matrix, Matrix>{Jx, Ju};
  };
}

namespace detail {

struct FamilyDynamics {
  int state_dim;
  int input_dim;
  DynamicsFn dynamics;
  JacobianFn jacobians;
  SecondDerivativeFn second_derivatives;
};

// x1+ = x1 + u, x2+ = b x2 + u^3
inline FamilyDynamics pannocchia2011(double b) {
  FamilyDynamics fam;
  fam.state_dim = 2;
  fam.input_dim = 1;
  fam.dynamics = [b](const Vector& x, const Vector& u) {
    Vector next(2);
    next << x[0] + u[0], b * x[1] + u[0] * u[0] * u[0];
    return next;
  };
  fam.jacobians = [b](const Vector&, const Vector& u) {
    Matrix Jx(2, 2);
    Jx << 1.0, 0.0, 0.0, b;
    Matrix Ju(2, 1);
    Ju << 1.0, 3.0 * u[0] * u[0];
    return std::pair<Matrix, Matrix>{Jx, Ju};
  };
  fam.second_derivatives = [](const Vector&, const Vector& u, const Vector& w) {
    WeightedHessian h{Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 1)};
    h.uu(0, 0) = 6.0 * u[0] * w[1];
    return h;
  };
  return fam;
}

inline FamilyDynamics make_family(const std::string& name, const Json& params) {
  if (name == "pannocchia2011") {
    const double b = params.contains("b") ? params.at("b").get<double>() : 0.9;
    return pannocchia2011(b);
  }
  throw FormatError("unknown dynamics family '" + name + "'");
}

inline bool is_positive_definite(const Matrix& M) {
  if (M.rows() != M.cols() || M.rows() == 0) return false;
  if (!M.isApprox(M.transpose(), 1e-12)) return false;
  Eigen::LLT<Matrix> llt(M);
  return llt.info() == Eigen::Success;
}

}  // namespace detail

/// Throws ContractViolation if any structural invariant of the model is broken.
inline void validate_model(const SystemModel& model) {
  using detail::require;
  const int n = model.state_dim;
  const int m = model.input_dim;
  require(n > 0 && m > 0, "model: dimensions must be positive");
  require(model.horizon > 0, "model: horizon must be positive");
  require(static_cast<bool>(model.dynamics) && static_cast<bool>(model.jacobians),
          "model: dynamics and jacobians must be set");
  require(model.Q.rows() == n && detail::is_positive_definite(model.Q), "model: Q must be n x n SPD");
  require(model.R.rows() == m && detail::is_positive_definite(model.R), "model: R must be m x m SPD");
  require(model.terminal.P.rows() == n && detail::is_positive_definite(model.terminal.P),
          "model: P must be n x n SPD");
  require(model.terminal.alpha > 0.0, "model: terminal alpha must be positive");
  require(model.input_polytope.A.cols() == m && model.input_polytope.rows() > 0 &&
              model.input_polytope.b.size() == model.input_polytope.rows(),
          "model: input polytope shape");
  require((model.input_polytope.b.array() > 0.0).all(),
          "model: input polytope must contain the origin in its interior");
  require(model.state_polytope.A.cols() == n &&
              model.state_polytope.b.size() == model.state_polytope.rows(),
          "model: state polytope shape");
  require(model.state_polytope.rows() == 0 || (model.state_polytope.b.array() > 0.0).all(),
          "model: state polytope must contain the origin in its interior");
  const Vector f0 = model.dynamics(Vector::Zero(n), Vector::Zero(m));
  require(f0.size() == n, "model: dynamics returns wrong dimension");
  require(f0.norm() <= 1e-14, "model: f(0,0) must vanish");
}

/// Box { |x_i| <= half_width } as a polytope with rows ordered (-x_1, x_1, -x_2, x_2, ...).
inline Polytope symmetric_box(int dim, double half_width) {
  Polytope box{Matrix::Zero(2 * dim, dim), Vector::Constant(2 * dim, half_width)};
  for (int i = 0; i < dim; ++i) {
    box.A(2 * i, i) = -1.0;
    box.A(2 * i + 1, i) = 1.0;
  }
  return box;
}

/// Canonical JSON form. Matrices are row-major nested arrays.
inline Json model_to_json(const SystemModel& model) {
  Json j;
  j["family"] = model.family;
  j["parameters"] = model.parameters;
  j["Q"] = to_json(model.Q);
  j["R"] = to_json(model.R);
  j["P"] = to_json(model.terminal.P);
  j["alpha"] = model.terminal.alpha;
  j["horizon"] = model.horizon;
  j["input_polytope"] = {{"A", to_json(model.input_polytope.A)},
                         {"b", to_json(model.input_polytope.b)}};
  j["state_polytope"] = {{"A", to_json(model.state_polytope.A)},
                         {"b", to_json(model.state_polytope.b)}};
  return j;
}

inline SystemModel model_from_json(const Json& j) {
  try {
    SystemModel model;
    model.family = j.at("family").get<std::string>();
    model.parameters = j.value("parameters", Json::object());
    auto fam = detail::make_family(model.family, model.parameters);
    model.state_dim = fam.state_dim;
    model.input_dim = fam.input_dim;
    model.dynamics = std::move(fam.dynamics);
    model.jacobians = std::move(fam.jacobians);
    model.second_derivatives = std::move(fam.second_derivatives);
    model.Q = matrix_from_json(j.at("Q"), "Q");
    model.R = matrix_from_json(j.at("R"), "R");
    model.terminal.P = matrix_from_json(j.at("P"), "P");
    model.terminal.alpha = j.at("alpha").get<double>();
    model.horizon = j.at("horizon").get<int>();
    model.input_polytope.A = matrix_from_json(j.at("input_polytope").at("A"), "input_polytope.A");
    model.input_polytope.b = vector_from_json(j.at("input_polytope").at("b"), "input_polytope.b");
    if (j.contains("state_polytope")) {
      model.state_polytope.A = matrix_from_json(j.at("state_polytope").at("A"), "state_polytope.A");
      model.state_polytope.b = vector_from_json(j.at("state_polytope").at("b"), "state_polytope.b");
    } else {
      model.state_polytope = {Matrix::Zero(0, model.state_dim), Vector::Zero(0)};
    }
    validate_model(model);
    return model;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

/// Fingerprint of the canonical JSON form; stored in atlas and region-store files.
inline std::string model_hash(const SystemModel& model) {
  return to_hex(fnv1a64(model_to_json(model).dump()));
}

/**
 * Built-in benchmark: x1+ = x1 + u, x2+ = 0.9 x2 + u^3, |u| <= 1, Q = I, R = 1, N = 3,
 * terminal set x' diag(4, 10.53) x <= 1.1. The state set is the surrogate box [-10, 10]^2.
 *
 * Input rows are ordered (-u <= 1, u <= 1), so row 1 saturating means u = -1.
 */
inline SystemModel builtin_example_model() {
  Json j;
  j["family"] = "pannocchia2011";
  j["parameters"] = {{"b", 0.9}};
  j["Q"] = {{1.0, 0.0}, {0.0, 1.0}};
  j["R"] = {{1.0}};
  j["P"] = {{4.0, 0.0}, {0.0, 10.53}};
  j["alpha"] = 1.1;
  j["horizon"] = 3;
  j["input_polytope"] = {{"A", {{-1.0}, {1.0}}}, {"b", {1.0, 1.0}}};
  const Polytope box = symmetric_box(2, 10.0);
  j["state_polytope"] = {{"A", to_json(box.A)}, {"b", to_json(box.b)}};
  return model_from_json(j);
}

/// Resolves "builtin:pannocchia2011" or a path to a JSON model file.
inline SystemModel resolve_model(const std::string& spec) {
  if (spec == "builtin:pannocchia2011" || spec == "builtin") return builtin_example_model();
  if (spec.rfind("builtin:", 0) == 0) throw FormatError("unknown builtin model '" + spec + "'");
  return model_from_json(read_json_file(spec));
}

}  // namespace rnmpc

#endif  // RNMPC_MODEL_HPP_
