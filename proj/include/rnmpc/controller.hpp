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

#ifndef RNMPC_CONTROLLER_HPP_
#define RNMPC_CONTROLLER_HPP_

/**
 * @file
 * @brief Region store persistence, the online controller (stored law on an ellipsoid hit, OCP
 * otherwise), closed-loop simulation and Monte Carlo coverage.
 */

#include <rnmpc/atlas.hpp>
#include <rnmpc/core.hpp>
#include <rnmpc/ellipsoid.hpp>
#include <rnmpc/json_util.hpp>
#include <rnmpc/model.hpp>
#include <rnmpc/ocp.hpp>
#include <rnmpc/sqp.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rnmpc {

struct StoreEntry {
  Ellipsoid ellipsoid;
  Vector u_star;
  IndexSet subset;
  std::uint64_t seed = 0;
  int n_samples = 0;
  int violations = 0;
  double worst_margin = 0.0;
};

struct RegionStore {
  std::string model_hash;
  std::vector<StoreEntry> entries;
  double law_tolerance = 1e-6;
  /// free-form creation metadata (config, seeds, tolerances)
  Json metadata = Json::object();
};

/// Refused store file: malformed, tampered, unverified or built for another model.
class StoreError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Minimum verification sample count for a persisted entry.
inline constexpr int kMinStoreVerificationSamples = 1000;

namespace detail {

inline Json entry_payload(const StoreEntry& e) {
  return {{"E", to_json(e.ellipsoid.E)},
          {"x_c", to_json(e.ellipsoid.center)},
          {"u_star", to_json(e.u_star)},
          {"A_tilde", one_based(e.subset)},
          {"verification",
           {{"seed", e.seed}, {"n_samples", e.n_samples}, {"violations", e.violations}, {"worst_margin", e.worst_margin}}}};
}

inline std::string payload_hash(const Json& payload) { return to_hex(fnv1a64(payload.dump())); }

}  // namespace detail

/// Pairs (i, j) of entries with different laws whose ellipsoids share a sampled point.
inline std::vector<std::pair<std::size_t, std::size_t>> find_overlaps(const RegionStore& store, int samples_per_entry = 2000,
                                                                      std::uint64_t seed = 17, double law_tolerance = 1e-6) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto& es = store.entries;
  for (std::size_t i = 0; i < es.size(); ++i) {
    for (std::size_t j = i + 1; j < es.size(); ++j) {
      if ((es[i].u_star - es[j].u_star).cwiseAbs().maxCoeff() <= law_tolerance) continue;
      bool hit = es[i].ellipsoid.contains(es[j].ellipsoid.center) || es[j].ellipsoid.contains(es[i].ellipsoid.center);
      EllipsoidSampler si(es[i].ellipsoid, seed + i), sj(es[j].ellipsoid, seed + j);
      for (int k = 0; k < samples_per_entry && !hit; ++k)
        hit = es[j].ellipsoid.contains(si()) || es[i].ellipsoid.contains(sj());
      if (hit) out.emplace_back(i, j);
    }
  }
  return out;
}

/// Checks every store invariant against the given model; throws StoreError on the first failure.
inline void validate_store(const RegionStore& store, const SystemModel& model) {
  if (store.model_hash != model_hash(model))
    throw StoreError("model hash mismatch: store " + store.model_hash + ", model " + model_hash(model));
  for (std::size_t k = 0; k < store.entries.size(); ++k) {
    const auto& e = store.entries[k];
    const std::string where = "entry " + std::to_string(k) + ": ";
    if (e.ellipsoid.center.size() != model.state_dim || !is_valid_ellipsoid(e.ellipsoid))
      throw StoreError(where + "invalid ellipsoid");
    if (e.u_star.size() != model.input_dim) throw StoreError(where + "u_star has wrong dimension");
    if (e.violations != 0 || e.n_samples < kMinStoreVerificationSamples)
      throw StoreError(where + "not verified with at least " + std::to_string(kMinStoreVerificationSamples) + " samples");
  }
  if (!find_overlaps(store, 500).empty()) throw StoreError("entries with different laws overlap");
}

inline Json store_to_json(const RegionStore& store) {
  Json entries = Json::array();
  for (const auto& e : store.entries) {
    Json j = detail::entry_payload(e);
    j["payload_hash"] = detail::payload_hash(j);
    entries.push_back(std::move(j));
  }
  return {{"model_hash", store.model_hash},
          {"tolerances", {{"law_tolerance", store.law_tolerance}}},
          {"metadata", store.metadata},
          {"entries", entries}};
}

inline RegionStore store_from_json(const Json& j) {
  RegionStore store;
  try {
    store.model_hash = j.at("model_hash").get<std::string>();
    store.law_tolerance = j.at("tolerances").at("law_tolerance").get<double>();
    store.metadata = j.value("metadata", Json::object());
    for (const auto& je : j.at("entries")) {
      StoreEntry e;
      e.ellipsoid.E = matrix_from_json(je.at("E"), "entry.E");
      e.ellipsoid.center = vector_from_json(je.at("x_c"), "entry.x_c");
      e.u_star = vector_from_json(je.at("u_star"), "entry.u_star");
      e.subset = index_set_from_json(je.at("A_tilde"));
      const Json& v = je.at("verification");
      e.seed = v.at("seed").get<std::uint64_t>();
      e.n_samples = v.at("n_samples").get<int>();
      e.violations = v.at("violations").get<int>();
      e.worst_margin = v.at("worst_margin").get<double>();
      if (je.at("payload_hash").get<std::string>() != detail::payload_hash(detail::entry_payload(e)))
        throw StoreError("entry " + std::to_string(store.entries.size()) + ": payload hash mismatch");
      store.entries.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw StoreError(std::string("malformed store file: ") + e.what());
  } catch (const FormatError& e) {
    throw StoreError(std::string("malformed store file: ") + e.what());
  }
  return store;
}

/**
 * Fits and verifies ellipsoids for every class and assembles the store. Entries are ordered by
 * class (as given) and fitting round. Throws StoreError if entries with different laws overlap.
 */
inline RegionStore build_store(const SystemModel& model, const SampleAtlas& atlas,
                               const std::vector<FeedbackClass>& classes, int max_ellipsoids,
                               const FitOptions& options = {}, SolverStats* stats = nullptr) {
  RegionStore store;
  store.model_hash = model_hash(model);
  store.law_tolerance = options.verify.law_tolerance;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    FitOptions per_class = options;
    per_class.seed = options.seed + 0x9e3779b97f4a7c15ULL * (c + 1);
    for (const auto& f : fit_inner_ellipsoids(classes[c], model, atlas, max_ellipsoids, per_class, stats))
      store.entries.push_back({f.ellipsoid, classes[c].u_star, classes[c].subset, f.seed, f.report.samples_tested,
                               f.report.violations, f.report.worst_margin});
  }
  if (!find_overlaps(store).empty()) throw StoreError("fitted ellipsoids with different laws overlap");
  return store;
}

/// Doubles are written in shortest round-trip form, so save/load is bit-exact.
inline void save_store(const RegionStore& store, const std::string& path) {
  write_text_file(path, store_to_json(store).dump(2) + "\n");
}

inline RegionStore load_store(const std::string& path, const SystemModel& model) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const FormatError& e) {
    throw StoreError(e.what());
  }
  RegionStore store = store_from_json(j);
  validate_store(store, model);
  return store;
}

/// Solver workspace of one controller: options, counters and the shifted warm start.
struct SolverContext {
  SolverOptions options;
  SolverStats stats;
  std::optional<Vector> warm_start;
};

struct ControlResult {
  Vector u;
  bool ocp_solved = false;
  std::optional<std::size_t> ellipsoid;
  SolveStatus status = SolveStatus::Converged;
  double solve_time_us = 0.0;
};

/// Drop u(0), append 0 projected onto the input polytope.
inline Vector shifted_warm_start(const OCPInstance& ocp, const Vector& U) {
  const int m = ocp.model().input_dim;
  Vector next = Vector::Zero(U.size());
  next.head(U.size() - m) = U.tail(U.size() - m);
  return detail::project_inputs(ocp, next);
}

/**
 * One step of the regional controller: the first stored ellipsoid containing x supplies the law;
 * otherwise the OCP is solved (warm started from the shifted previous solution) and its first
 * input returned. A non-converged solve is reported through status with u left empty.
 */
inline ControlResult control_step(const Vector& x, const RegionStore* store, const SystemModel& model,
                                  SolverContext& context) {
  detail::require_dim(x.size(), model.state_dim, "control_step: state");
  detail::require(x.allFinite(), "control_step: state must be finite");
  ControlResult r;
  const auto t0 = std::chrono::steady_clock::now();
  if (store) {
    for (std::size_t k = 0; k < store->entries.size(); ++k) {
      if (store->entries[k].ellipsoid.contains(x)) {
        r.u = store->entries[k].u_star;
        r.ellipsoid = k;
        context.warm_start.reset();
        r.solve_time_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
        return r;
      }
    }
  }
  const OCPInstance ocp(model, x);
  std::optional<Vector> warm;
  if (context.warm_start && context.warm_start->size() == ocp.decision_dim()) warm = context.warm_start;
  const NLPSolution sol = solve_ocp(ocp, warm, context.options, &context.stats);
  r.ocp_solved = true;
  r.status = sol.status;
  if (sol.converged()) {
    r.u = sol.feedback(model.input_dim);
    context.warm_start = shifted_warm_start(ocp, sol.U_star);
  } else {
    context.warm_start.reset();
  }
  r.solve_time_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct TrajectoryStep {
  Vector x;
  Vector u;
  bool ocp_solved = false;
  std::optional<std::size_t> ellipsoid;
  double solve_time_us = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  /// state after the last applied input
  Vector final_state;
  double cost = 0.0;
  bool aborted = false;
  SolveStatus abort_status = SolveStatus::Converged;

  double ocp_avoided_fraction() const {
    if (steps.empty()) return 0.0;
    std::size_t skipped = 0;
    for (const auto& s : steps) skipped += s.ocp_solved ? 0 : 1;
    return static_cast<double>(skipped) / static_cast<double>(steps.size());
  }
};

/// Iterates control_step and the dynamics. Pass store = nullptr for plain NMPC.
inline Trajectory run_closed_loop(const Vector& x0, int steps, const RegionStore* store, const SystemModel& model,
                                  SolverContext& context) {
  detail::require(steps >= 1, "run_closed_loop: steps must be at least 1");
  Trajectory traj;
  Vector x = x0;
  for (int k = 0; k < steps; ++k) {
    const ControlResult r = control_step(x, store, model, context);
    if (r.status != SolveStatus::Converged) {
      traj.aborted = true;
      traj.abort_status = r.status;
      break;
    }
    traj.steps.push_back({x, r.u, r.ocp_solved, r.ellipsoid, r.solve_time_us});
    traj.cost += x.dot(model.Q * x) + r.u.dot(model.R * r.u);
    x = eval_dynamics(model, x, r.u);
  }
  traj.final_state = x;
  return traj;
}

inline std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream os;
  os.precision(17);
  const Eigen::Index n = traj.final_state.size();
  const Eigen::Index m = traj.steps.empty() ? 0 : traj.steps.front().u.size();
  os << "step";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
  os << ",ocp_solved,ellipsoid_index,solve_time_us\n";
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const auto& s = traj.steps[k];
    os << k;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.x[i];
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << s.u[i];
    os << ',' << (s.ocp_solved ? 1 : 0) << ',' << (s.ellipsoid ? static_cast<long>(*s.ellipsoid) : -1L) << ','
       << static_cast<long long>(std::llround(s.solve_time_us)) << '\n';
  }
  return os.str();
}

struct CoverageResult {
  double fraction = 0.0;
  double half_width = 0.0;
  std::size_t feasible = 0;
  std::size_t covered = 0;
  std::size_t draws = 0;
};

/// Raised when a coverage window holds no feasible state.
class NoFeasibleSamples : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/**
 * Monte Carlo coverage of the feasible set by the stored ellipsoids. States are drawn uniformly in
 * the window until n_samples feasible ones have been seen; the result is covered / feasible with a
 * 95% normal-approximation binomial half-width. A state inside a stored ellipsoid is counted as
 * feasible without a solve (every entry is verified). Throws NoFeasibleSamples when the first
 * n_samples draws are all infeasible.
 */
inline CoverageResult coverage_estimate(const RegionStore& store, const SystemModel& model, const Window& window,
                                        int n_samples, std::uint64_t seed, const SolverOptions& options = {},
                                        SolverStats* stats = nullptr) {
  detail::require(n_samples >= 1000, "coverage_estimate: n_samples must be at least 1000");
  detail::require_dim(window.dim(), model.state_dim, "coverage_estimate: window");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CoverageResult r;
  Vector x(model.state_dim);
  while (r.feasible < static_cast<std::size_t>(n_samples)) {
    if (r.feasible == 0 && r.draws >= static_cast<std::size_t>(n_samples))
      throw NoFeasibleSamples("no feasible state among the first " + std::to_string(r.draws) + " draws");
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = window.lower[i] + (window.upper[i] - window.lower[i]) * unit(rng);
    ++r.draws;
    bool inside = false;
    for (const auto& e : store.entries)
      if (e.ellipsoid.contains(x)) {
        inside = true;
        break;
      }
    if (inside) {
      ++r.feasible;
      ++r.covered;
    } else if (is_feasible(OCPInstance(model, x), options, stats)) {
      ++r.feasible;
    }
  }
  r.fraction = static_cast<double>(r.covered) / static_cast<double>(r.feasible);
  r.half_width = 1.96 * std::sqrt(r.fraction * (1.0 - r.fraction) / static_cast<double>(r.feasible));
  return r;
}

/// Bounding box of the atlas's feasible samples, padded by one grid step and clipped to the window.
inline Window feasible_bounding_window(const SampleAtlas& atlas) {
  const auto n = atlas.window.dim();
  Vector lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (const auto& s : atlas.samples)
    if (s.feasible) {
      lo = lo.cwiseMin(s.x0);
      hi = hi.cwiseMax(s.x0);
    }
  if (!lo.allFinite()) throw NoFeasibleSamples("atlas has no feasible sample");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = (atlas.window.upper[i] - atlas.window.lower[i]) / (atlas.resolution[static_cast<std::size_t>(i)] - 1);
    lo[i] = std::max(atlas.window.lower[i], lo[i] - h);
    hi[i] = std::min(atlas.window.upper[i], hi[i] + h);
  }
  return make_window(lo, hi);
}

}  // namespace rnmpc

#endif  // RNMPC_CONTROLLER_HPP_
