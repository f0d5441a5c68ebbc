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

#ifndef RNMPC_SQP_HPP_
#define RNMPC_SQP_HPP_

/**
 * @file
 * @brief Dense SQP for the condensed OCP.
 *
 * Hessian: exact Lagrangian Hessian (analytic when the model supplies second derivatives),
 * convexified along the previous working-set normals when indefinite; Gauss-Newton curvature is
 * available through SolverOptions::exact_hessian = false. Levenberg regularization mu I on QP
 * failure. Globalization: l1 merit function with Armijo backtracking. A Gauss-Newton restoration phase on
 * the squared constraint violation (inputs kept hard) takes over whenever the linearized
 * constraints are inconsistent; if it stalls with violation above the elastic tolerance the
 * problem is reported infeasible.
 */

#include <rnmpc/core.hpp>
#include <rnmpc/ocp.hpp>
#include <rnmpc/qp.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

namespace rnmpc {

enum class SolveStatus { Converged, Infeasible, MaxIter, RegularityFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::RegularityFailure: return "regularity_failure";
  }
  return "unknown";
}

struct NLPSolution {
  Vector U_star;
  Vector lambda_star;
  double V_star = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double kkt_residual = 0.0;
  Vector constraints;  ///< G(x0, U_star)

  [[nodiscard]] bool converged() const { return status == SolveStatus::Converged; }
  /// The optimal feedback law u*(x0): first m entries of U_star.
  [[nodiscard]] Vector feedback(int input_dim) const { return U_star.head(input_dim); }
};

struct ActiveSetInfo {
  IndexSet active;    ///< A
  IndexSet inactive;  ///< I
  IndexSet weak;      ///< W: active with lambda_i <= eps_lambda
  IndexSet strong;    ///< A \ W
  double eps_act = 0.0;
  double eps_lambda = 0.0;
};

struct SolverOptions {
  int max_iterations = 100;
  double kkt_tolerance = 1e-9;  ///< convergence target; the returned contract is 1e-8
  double regularization = 1e-8;
  double max_regularization = 1e4;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double elastic_tolerance = 1e-6;
  int restoration_iterations = 100;
  bool multistart = true;  ///< also start from a lattice over the input box, keep the best
  int multistart_levels = 3;  ///< lattice points per decision coordinate
  int multistart_max = 729;   ///< above this lattice size a fixed pseudo-random design is used
  double multistart_dedupe = 0.05;  ///< restored starts closer than this (max norm) are skipped
  /// Lattice starts are tried in order of increasing violation; when none of the first
  /// `infeasible_probe` restorations succeeds (and the primary start failed) x0 is infeasible.
  int infeasible_probe = 8;
  /// Use the exact Lagrangian Hessian whenever it is positive definite (Gauss-Newton otherwise).
  bool exact_hessian = true;
};

/// Instrumentation counters; one per solver context.
struct SolverStats {
  long solves = 0;
  long nlp_iterations = 0;
  long restorations = 0;
  long local_solves = 0;
};

namespace detail {

inline double positive_part_sum(const Vector& G) { return G.cwiseMax(0.0).sum(); }

inline double kkt_residual(const Linearization& lin, const Vector& lambda) {
  const Vector stat = lin.cost_gradient + lin.constraint_jacobian.transpose() * lambda;
  const double stationarity = stat.cwiseAbs().maxCoeff();
  const double complementarity = lambda.cwiseProduct(lin.constraints).cwiseAbs().maxCoeff();
  const double primal = std::max(0.0, lin.constraints.maxCoeff());
  const double dual = std::max(0.0, -lambda.minCoeff());
  return std::max({stationarity, complementarity, primal, dual});
}

/// Euclidean projection of each u(k) onto the input polytope.
inline Vector project_inputs(const OCPInstance& ocp, const Vector& U) {
  const SystemModel& model = ocp.model();
  const int m = model.input_dim;
  Vector out = U;
  for (int k = 0; k < ocp.horizon(); ++k) {
    const Vector u = ocp.input(U, k);
    if (model.input_polytope.contains(u)) continue;
    const QPResult qp = solve_qp(Matrix::Identity(m, m), -u, model.input_polytope.A, model.input_polytope.b);
    if (qp.status == QPStatus::Optimal) out.segment(k * m, m) = qp.step;
  }
  return out;
}

inline Vector lagrangian_gradient(const OCPInstance& ocp, const Vector& U, const IndexSet& active,
                                  const Vector& lambda) {
  const Linearization lin = linearize(ocp, U);
  Vector grad = lin.cost_gradient;
  for (int i : active) grad += lambda[i] * lin.constraint_jacobian.row(i).transpose();
  return grad;
}

/// Hessian of V + lambda' G: analytic when the model supplies second derivatives, otherwise
/// central differences of the exact gradient.
inline Matrix lagrangian_hessian(const OCPInstance& ocp, const Vector& U, const Vector& lambda) {
  if (ocp.model().second_derivatives) return lagrangian_hessian_exact(ocp, U, lambda);
  const Eigen::Index nu = U.size();
  IndexSet rows;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] != 0.0) rows.push_back(static_cast<int>(i));
  Matrix hess(nu, nu);
  Vector Up = U;
  for (Eigen::Index i = 0; i < nu; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(U[i]));
    Up[i] = U[i] + h;
    const Vector gp = lagrangian_gradient(ocp, Up, rows, lambda);
    Up[i] = U[i] - h;
    const Vector gm = lagrangian_gradient(ocp, Up, rows, lambda);
    Up[i] = U[i];
    hess.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

inline bool sufficiently_positive(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  return ev.minCoeff() > 1e-8 * std::max(1.0, ev.maxCoeff());
}

/**
 * Makes the exact Lagrangian Hessian usable by the convex QP. Curvature along the normals of the
 * previous working set is raised first (rho a a'), which leaves the step on that active manifold
 * unchanged; only if that is not enough the whole matrix is shifted by tau I.
 */
inline Matrix convexified_hessian(Matrix exact, const Linearization& lin, const std::optional<IndexSet>& working) {
  if (sufficiently_positive(exact)) return exact;
  if (working && !working->empty()) {
    Matrix normals = Matrix::Zero(exact.rows(), exact.cols());
    for (int i : *working) {
      const Vector a = lin.constraint_jacobian.row(i).transpose();
      const double norm = a.norm();
      if (norm > 0.0) normals.noalias() += (a / norm) * (a / norm).transpose();
    }
    const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
    for (double rho = scale; rho <= 1e6 * scale; rho *= 10.0) {
      Matrix trial = exact + rho * normals;
      if (sufficiently_positive(trial)) return trial;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(exact, Eigen::EigenvaluesOnly);
  const double tau = -eig.eigenvalues().minCoeff() + 1e-6 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  exact.diagonal().array() += tau;
  return exact;
}

// Gauss-Newton on 0.5 sum max(0, G_i)^2 over the non-input rows, input rows kept as hard
// linear constraints. Returns a point where the nonlinear rows hold, or nullopt when the
// violation stalls above the elastic tolerance.
inline std::optional<Vector> restore_feasibility(const OCPInstance& ocp, Vector U, const SolverOptions& opt,
                                                 SolverStats* stats) {
  if (stats) ++stats->restorations;
  const int q_in = ocp.horizon() * ocp.input_rows();
  const Eigen::Index nu = ocp.decision_dim();
  auto violation = [&](const Vector& G) { return G.tail(G.size() - q_in).cwiseMax(0.0); };

  for (int it = 0; it < opt.restoration_iterations; ++it) {
    const Linearization lin = linearize(ocp, U);
    const Vector& G = lin.constraints;
    const Vector v = violation(G);
    const double max_violation = v.size() ? v.maxCoeff() : 0.0;
    if (max_violation <= 1e-12) return U;
    const double psi = 0.5 * v.squaredNorm();

    Matrix H = Matrix::Zero(nu, nu);
    Vector g = Vector::Zero(nu);
    for (Eigen::Index i = q_in; i < G.size(); ++i) {
      if (G[i] <= 0.0) continue;
      const Vector a = lin.constraint_jacobian.row(i).transpose();
      H.noalias() += a * a.transpose();
      g += G[i] * a;
    }
    H += 1e-10 * (1.0 + H.diagonal().maxCoeff()) * Matrix::Identity(nu, nu);
    const QPResult qp = solve_qp(H, g, lin.constraint_jacobian.topRows(q_in), -G.head(q_in));
    if (qp.status != QPStatus::Optimal) return std::nullopt;

    double alpha = 1.0;
    const double slope = g.dot(qp.step);
    bool moved = false;
    double psi_new = psi;
    while (alpha > 1e-12) {
      const Vector trial = U + alpha * qp.step;
      psi_new = 0.5 * violation(constraint_values(ocp, trial)).squaredNorm();
      if (psi_new <= psi + opt.armijo * alpha * std::min(slope, 0.0)) {
        U = trial;
        moved = true;
        break;
      }
      alpha *= opt.backtrack;
    }
    // A nonzero-residual stationary point is approached only linearly; stop once progress stalls.
    const double stall = max_violation > 1e-3 ? 1e-4 : 1e-8;
    const bool stalled = moved && psi - psi_new < stall * psi;
    if (!moved || stalled || alpha * qp.step.norm() <= 1e-15 * (1.0 + U.norm())) {
      if (max_violation > opt.elastic_tolerance) return std::nullopt;
      return U;
    }
  }
  const Vector v = violation(constraint_values(ocp, U));
  if (v.size() && v.maxCoeff() > opt.elastic_tolerance) return std::nullopt;
  return U;
}

inline NLPSolution local_solve(const OCPInstance& ocp, const Vector& start, const SolverOptions& opt,
                               SolverStats* stats) {
  const Eigen::Index nu = ocp.decision_dim();
  const int q = ocp.constraint_count();
  const int term = ocp.terminal_row();

  if (stats) ++stats->local_solves;
  NLPSolution sol;
  Vector U = project_inputs(ocp, start);
  Vector lambda = Vector::Zero(q);
  double penalty = 1.0;
  std::optional<IndexSet> warm;
  Linearization lin = linearize(ocp, U);
  int restorations = 0;
  auto infeasible = [&](const Vector& at, const Linearization& l) {
    NLPSolution out;
    out.status = SolveStatus::Infeasible;
    out.iterations = sol.iterations;
    out.U_star = at;
    out.lambda_star = Vector::Zero(q);
    out.constraints = l.constraints;
    out.V_star = l.cost;
    out.kkt_residual = kkt_residual(l, out.lambda_star);
    return out;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    sol.iterations = it + 1;
    if (stats) ++stats->nlp_iterations;
    Matrix H0 = lin.cost_hessian_gn + std::max(0.0, lambda[term]) * lin.terminal_curvature;
    if (opt.exact_hessian) H0 = convexified_hessian(lagrangian_hessian(ocp, U, lambda), lin, warm);

    QPResult qp;
    double mu = opt.regularization;
    for (;;) {
      const Matrix H = H0 + mu * Matrix::Identity(nu, nu);
      qp = solve_qp(H, lin.cost_gradient, lin.constraint_jacobian, -lin.constraints, warm);
      if (qp.status == QPStatus::Optimal || qp.status == QPStatus::Infeasible) break;
      mu *= 10.0;
      if (mu > opt.max_regularization) break;
    }

    if (qp.status == QPStatus::Infeasible) {
      if (restorations >= 3) return infeasible(U, lin);
      ++restorations;
      auto restored = restore_feasibility(ocp, U, opt, stats);
      if (!restored) return infeasible(U, lin);
      U = *restored;
      lambda.setZero();
      warm.reset();
      lin = linearize(ocp, U);
      continue;
    }
    if (qp.status != QPStatus::Optimal) {
      sol.status = SolveStatus::RegularityFailure;
      sol.U_star = U;
      sol.lambda_star = lambda;
      sol.constraints = lin.constraints;
      sol.V_star = lin.cost;
      sol.kkt_residual = kkt_residual(lin, lambda);
      return sol;
    }

    const double res = kkt_residual(lin, qp.multipliers);
    if (res <= opt.kkt_tolerance) {
      sol.status = SolveStatus::Converged;
      sol.U_star = U;
      sol.lambda_star = qp.multipliers;
      sol.constraints = lin.constraints;
      sol.V_star = lin.cost;
      sol.kkt_residual = res;
      return sol;
    }

    const double lam_max = qp.multipliers.size() ? qp.multipliers.maxCoeff() : 0.0;
    if (penalty < 1.1 * lam_max + 1e-6) penalty = 2.0 * lam_max + 1.0;
    const double phi0 = lin.cost + penalty * positive_part_sum(lin.constraints);
    const double slope = lin.cost_gradient.dot(qp.step) - penalty * positive_part_sum(lin.constraints);

    double alpha = 1.0;
    Vector trial = U + qp.step;
    // Steps at roundoff level are taken whole; the merit cannot resolve them.
    const bool tiny = qp.step.norm() <= 1e-9 * (1.0 + U.norm());
    const double noise = 1e-14 * (1.0 + std::abs(phi0));
    while (!tiny && alpha > 1e-10) {
      trial = U + alpha * qp.step;
      const double phi = cost_value(ocp, trial) + penalty * positive_part_sum(constraint_values(ocp, trial));
      if (phi <= phi0 + opt.armijo * alpha * std::min(slope, 0.0) + noise) break;
      alpha *= opt.backtrack;
    }
    if (alpha <= 1e-10 && positive_part_sum(lin.constraints) > 0.0 && restorations < 3) {
      ++restorations;
      auto restored = restore_feasibility(ocp, U, opt, stats);
      if (!restored) return infeasible(U, lin);
      U = *restored;
      lambda.setZero();
      warm.reset();
      lin = linearize(ocp, U);
      continue;
    }
    U = trial;
    lambda = (1.0 - alpha) * lambda + alpha * qp.multipliers;
    warm = qp.active;
    lin = linearize(ocp, U);
  }

  sol.status = SolveStatus::MaxIter;
  sol.U_star = U;
  sol.lambda_star = lambda;
  sol.constraints = lin.constraints;
  sol.V_star = lin.cost;
  sol.kkt_residual = kkt_residual(lin, lambda);
  return sol;
}

/// Per-coordinate half extents of the input polytope's bounding box, along each axis.
inline Vector input_extent(const SystemModel& model) {
  const Polytope& poly = model.input_polytope;
  Vector ext = Vector::Constant(model.input_dim, std::numeric_limits<double>::infinity());
  for (Eigen::Index r = 0; r < poly.rows(); ++r)
    for (int j = 0; j < model.input_dim; ++j)
      if (std::abs(poly.A(r, j)) > 1e-12) ext[j] = std::min(ext[j], poly.b[r] / std::abs(poly.A(r, j)));
  for (int j = 0; j < model.input_dim; ++j)
    if (!std::isfinite(ext[j])) ext[j] = 1.0;
  return ext;
}

/// Cell-centred lattice over the input bounding box (projected onto the input polytope).
inline std::vector<Vector> multistart_points(const OCPInstance& ocp, int levels, int max_points) {
  const SystemModel& model = ocp.model();
  const int m = model.input_dim;
  const int nu = ocp.decision_dim();
  const Vector ext = input_extent(model);
  auto coord = [&](int level) { return -1.0 + 2.0 * (level + 0.5) / levels; };

  std::vector<Vector> points;
  if (std::pow(static_cast<double>(levels), nu) <= max_points) {
    std::vector<int> idx(static_cast<std::size_t>(nu), 0);
    for (;;) {
      Vector U(nu);
      for (int i = 0; i < nu; ++i) U[i] = coord(idx[static_cast<std::size_t>(i)]) * ext[i % m];
      points.push_back(project_inputs(ocp, U));
      int i = 0;
      while (i < nu && ++idx[static_cast<std::size_t>(i)] == levels) idx[static_cast<std::size_t>(i++)] = 0;
      if (i == nu) break;
    }
  } else {
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<int> pick(0, levels - 1);
    for (int s = 0; s < max_points; ++s) {
      Vector U(nu);
      for (int i = 0; i < nu; ++i) U[i] = coord(pick(rng)) * ext[i % m];
      points.push_back(project_inputs(ocp, U));
    }
  }
  return points;
}

}  // namespace detail

/// max of stationarity, complementarity, primal violation and dual violation (infinity norms).
inline double kkt_residual(const OCPInstance& ocp, const Vector& U, const Vector& lambda) {
  detail::require_dim(lambda.size(), ocp.constraint_count(), "kkt_residual: lambda");
  return detail::kkt_residual(linearize(ocp, U), lambda);
}

/**
 * Solves the condensed OCP at the instance's x0. Cold start is U = 0 (inside the input polytope
 * by assumption). With options.multistart the fixed extra starts are tried as well and the
 * converged point with the lowest cost is returned.
 */
inline NLPSolution solve_ocp(const OCPInstance& ocp, const std::optional<Vector>& warm_start = std::nullopt,
                             const SolverOptions& options = {}, SolverStats* stats = nullptr) {
  if (warm_start) detail::require_dim(warm_start->size(), ocp.decision_dim(), "solve_ocp: warm start");
  if (stats) ++stats->solves;
  const Vector zero = Vector::Zero(ocp.decision_dim());
  if (!ocp.initial_state_admissible()) {
    NLPSolution sol;
    sol.status = SolveStatus::Infeasible;
    sol.U_star = zero;
    sol.lambda_star = Vector::Zero(ocp.constraint_count());
    sol.constraints = constraint_values(ocp, zero);
    sol.V_star = cost_value(ocp, zero);
    return sol;
  }

  NLPSolution best = detail::local_solve(ocp, warm_start.value_or(zero), options, stats);
  if (!options.multistart) return best;

  // Phase 1 from every lattice point, then SQP from each distinct feasible point found.
  std::vector<Vector> seen;
  if (best.converged()) seen.push_back(best.U_star);
  auto is_new = [&](const Vector& U) {
    return std::none_of(seen.begin(), seen.end(), [&](const Vector& v) {
      return (v - U).cwiseAbs().maxCoeff() < options.multistart_dedupe;
    });
  };
  std::vector<Vector> starts;
  if (warm_start) starts.push_back(zero);
  for (auto& s : detail::multistart_points(ocp, options.multistart_levels, options.multistart_max))
    starts.push_back(std::move(s));
  const int q_in = ocp.horizon() * ocp.input_rows();
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Vector G = constraint_values(ocp, starts[i]);
    order.emplace_back(G.tail(G.size() - q_in).cwiseMax(0.0).sum(), i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  int total_iterations = best.iterations;
  int failures = 0;
  for (const auto& [violation, index] : order) {
    if (!best.converged() && seen.empty() && failures >= options.infeasible_probe) break;
    auto restored = detail::restore_feasibility(ocp, starts[index], options, stats);
    if (!restored) {
      ++failures;
      continue;
    }
    if (!is_new(*restored)) continue;
    seen.push_back(*restored);
    NLPSolution cand = detail::local_solve(ocp, *restored, options, stats);
    total_iterations += cand.iterations;
    if (!cand.converged()) continue;
    seen.push_back(cand.U_star);
    if (!best.converged() || cand.V_star < best.V_star - 1e-12) best = std::move(cand);
  }
  best.iterations = total_iterations;
  return best;
}

/**
 * Feasibility only: x0 admissible and some start restores to a point satisfying every row. Cheaper
 * than solve_ocp because no optimality iterations are run.
 */
inline bool is_feasible(const OCPInstance& ocp, const SolverOptions& options = {}, SolverStats* stats = nullptr) {
  if (!ocp.initial_state_admissible()) return false;
  std::vector<Vector> starts{Vector::Zero(ocp.decision_dim())};
  for (auto& s : detail::multistart_points(ocp, options.multistart_levels, options.multistart_max))
    starts.push_back(std::move(s));
  const int q_in = ocp.horizon() * ocp.input_rows();
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Vector G = constraint_values(ocp, starts[i]);
    const double v = G.tail(G.size() - q_in).cwiseMax(0.0).sum();
    if (v == 0.0) return true;
    order.emplace_back(v, i);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const int probes = options.multistart ? options.infeasible_probe : 1;
  for (int k = 0; k < probes && k < static_cast<int>(order.size()); ++k)
    if (detail::restore_feasibility(ocp, starts[order[static_cast<std::size_t>(k)].second], options, stats)) return true;
  return false;
}

/// A = {i : G_i >= -eps_act * max(1, |grad G_i|)}, W = {i in A : lambda_i <= eps_lambda}.
inline ActiveSetInfo classify_active_sets(const OCPInstance& ocp, const NLPSolution& solution,
                                          double eps_act = 1e-6, double eps_lambda = 1e-8) {
  detail::require(solution.converged(), "classify_active_sets: solution must be converged");
  const auto [G, J] = eval_constraints(ocp, solution.U_star);
  ActiveSetInfo info;
  info.eps_act = eps_act;
  info.eps_lambda = eps_lambda;
  for (int i = 0; i < ocp.constraint_count(); ++i) {
    const double scale = std::max(1.0, J.row(i).norm());
    if (G[i] >= -eps_act * scale) {
      info.active.push_back(i);
      (solution.lambda_star[i] <= eps_lambda ? info.weak : info.strong).push_back(i);
    } else {
      info.inactive.push_back(i);
    }
  }
  return info;
}


/**
 * Full-rank test for the Jacobian of the active-set KKT equations
 *   [ grad_U L(U, lambda_A) ; G_A(U) ]  with respect to (U, lambda_A),
 * i.e. [[hess L, J_A'], [J_A, 0]] with the exact Hessian of L. Rank is numerical: sigma_min > 1e-8 sigma_max.
 */
inline bool check_region_regularity(const OCPInstance& ocp, const NLPSolution& solution,
                                    const ActiveSetInfo& info) {
  detail::require(solution.converged(), "check_region_regularity: solution must be converged");
  const Eigen::Index nu = ocp.decision_dim();
  const auto na = static_cast<Eigen::Index>(info.active.size());
  const Vector& U = solution.U_star;

  Vector lambda_active = Vector::Zero(solution.lambda_star.size());
  for (int i : info.active) lambda_active[i] = solution.lambda_star[i];
  const Matrix hess = detail::lagrangian_hessian(ocp, U, lambda_active);

  const Matrix J = eval_constraints(ocp, U).second;
  Matrix K = Matrix::Zero(nu + na, nu + na);
  K.topLeftCorner(nu, nu) = hess;
  for (Eigen::Index k = 0; k < na; ++k) {
    K.block(nu + k, 0, 1, nu) = J.row(info.active[static_cast<std::size_t>(k)]);
    K.block(0, nu + k, nu, 1) = J.row(info.active[static_cast<std::size_t>(k)]).transpose();
  }
  Eigen::JacobiSVD<Matrix> svd(K);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return false;
  return s[s.size() - 1] > 1e-8 * s[0];
}

}  // namespace rnmpc

#endif  // RNMPC_SQP_HPP_
