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

#ifndef RNMPC_ATLAS_HPP_
#define RNMPC_ATLAS_HPP_

/**
 * @file
 * @brief Grid exploration of the feasible set and grouping of samples by the active input rows of
 * u(0).
 */

#include <rnmpc/core.hpp>
#include <rnmpc/json_util.hpp>
#include <rnmpc/model.hpp>
#include <rnmpc/ocp.hpp>
#include <rnmpc/sqp.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rnmpc {

/// Axis-aligned box in state space.
struct Window {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vector& x) const {
    return ((x - lower).array() >= 0.0).all() && ((upper - x).array() >= 0.0).all();
  }
  double volume() const { return (upper - lower).prod(); }
};

inline Window make_window(const Vector& lower, const Vector& upper) {
  detail::require_dim(upper.size(), lower.size(), "window upper bound");
  detail::require(lower.size() > 0 && ((upper - lower).array() > 0.0).all(), "window must have positive extent");
  return {lower, upper};
}

/// [-6,6] x [-7,7]: covers the feasible set of the built-in example with margin.
inline Window default_window() {
  return {Eigen::Vector2d(-6.0, -7.0), Eigen::Vector2d(6.0, 7.0)};
}

inline Json window_to_json(const Window& w) { return {{"lower", to_json(w.lower)}, {"upper", to_json(w.upper)}}; }

inline Window window_from_json(const Json& j) {
  return make_window(vector_from_json(j.at("lower"), "window.lower"), vector_from_json(j.at("upper"), "window.upper"));
}

struct AtlasOptions {
  double eps_act = 1e-6;
  double eps_lambda = 1e-8;
  bool warm_start = true;
  SolverOptions solver;
  /// called after every sample with (done, total); may be empty
  std::function<void(std::size_t, std::size_t)> progress;
};

struct AtlasSample {
  Vector x0;
  SolveStatus status = SolveStatus::Infeasible;
  bool feasible = false;
  IndexSet active;
  IndexSet weak;
  Vector U_star;
  Vector u_star;
  double V_star = 0.0;
  double kkt_residual = 0.0;
  bool regular = false;
};

struct SampleAtlas {
  Window window;
  std::vector<int> resolution;
  double eps_act = 1e-6;
  double eps_lambda = 1e-8;
  std::string model_hash;
  std::vector<AtlasSample> samples;

  std::size_t feasible_count() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.feasible; }));
  }

  /// Distinct active sets of feasible samples, in lexicographic order.
  std::vector<IndexSet> distinct_active_sets() const {
    std::vector<IndexSet> sets;
    for (const auto& s : samples)
      if (s.feasible) sets.push_back(s.active);
    std::sort(sets.begin(), sets.end());
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    return sets;
  }

  /// Samples that failed for a reason other than infeasibility.
  std::size_t failure_count() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) {
      return s.status == SolveStatus::MaxIter || s.status == SolveStatus::RegularityFailure;
    }));
  }
};

/// A intersected with the first q_U rows, order preserved.
inline IndexSet saturated_subset(const IndexSet& active, int q_u) {
  IndexSet out;
  for (int i : active)
    if (i >= 0 && i < q_u) out.push_back(i);
  return out;
}

/// |subset| == m and the corresponding rows of G~ form a well conditioned square matrix.
inline bool check_feedback_condition(const IndexSet& subset, const Matrix& G, int m) {
  if (static_cast<int>(subset.size()) != m || G.cols() != m) return false;
  Matrix sub(m, m);
  for (int k = 0; k < m; ++k) {
    const int row = subset[static_cast<std::size_t>(k)];
    if (row < 0 || row >= G.rows()) return false;
    sub.row(k) = G.row(row);
  }
  Eigen::JacobiSVD<Matrix> svd(sub);
  const Vector& s = svd.singularValues();
  if (s[m - 1] <= 0.0) return false;
  return s[0] / s[m - 1] < 1e12;
}

/// u* = G~_sub^{-1} w~_sub.
inline Vector feedback_from_subset(const IndexSet& subset, const Matrix& G, const Vector& w) {
  const int m = static_cast<int>(G.cols());
  detail::require(check_feedback_condition(subset, G, m), "feedback_from_subset: submatrix is not invertible");
  Matrix sub(m, m);
  Vector rhs(m);
  for (int k = 0; k < m; ++k) {
    sub.row(k) = G.row(subset[static_cast<std::size_t>(k)]);
    rhs[k] = w[subset[static_cast<std::size_t>(k)]];
  }
  return sub.partialPivLu().solve(rhs);
}

/// Grid point coordinates; the first axis varies fastest.
inline std::vector<Vector> grid_points(const Window& window, const std::vector<int>& resolution) {
  const auto n = static_cast<std::size_t>(window.dim());
  detail::require(resolution.size() == n, "grid resolution must give one count per axis");
  for (int r : resolution) detail::require(r >= 2, "grid resolution must be at least 2 per axis");
  std::size_t total = 1;
  for (int r : resolution) total *= static_cast<std::size_t>(r);
  std::vector<Vector> points;
  points.reserve(total);
  std::vector<int> idx(n, 0);
  for (std::size_t p = 0; p < total; ++p) {
    Vector x(static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
      const auto i = static_cast<Eigen::Index>(a);
      x[i] = window.lower[i] + (window.upper[i] - window.lower[i]) * idx[a] / (resolution[a] - 1);
    }
    points.push_back(std::move(x));
    for (std::size_t a = 0; a < n && ++idx[a] == resolution[a]; ++a) idx[a] = 0;
  }
  return points;
}

/// Solves and classifies one state.
inline AtlasSample analyse_state(const SystemModel& model, const Vector& x0, const std::optional<Vector>& warm,
                                 const AtlasOptions& options, SolverStats* stats = nullptr) {
  AtlasSample s;
  s.x0 = x0;
  const OCPInstance ocp(model, x0);
  const NLPSolution sol = solve_ocp(ocp, warm, options.solver, stats);
  s.status = sol.status;
  s.kkt_residual = sol.kkt_residual;
  s.feasible = sol.converged();
  if (!s.feasible) return s;
  const ActiveSetInfo info = classify_active_sets(ocp, sol, options.eps_act, options.eps_lambda);
  s.active = info.active;
  s.weak = info.weak;
  s.U_star = sol.U_star;
  s.u_star = sol.feedback(model.input_dim);
  s.V_star = sol.V_star;
  s.regular = check_region_regularity(ocp, sol, info);
  return s;
}

/**
 * Solves the OCP at every grid point. Along the first axis each solve is warm started from the
 * previous sample's solution when that one converged. Failures are recorded, never thrown.
 */
inline SampleAtlas explore_grid(const SystemModel& model, const Window& window, const std::vector<int>& resolution,
                                const AtlasOptions& options = {}, SolverStats* stats = nullptr) {
  detail::require_dim(window.dim(), model.state_dim, "explore_grid: window");
  SampleAtlas atlas;
  atlas.window = window;
  atlas.resolution = resolution;
  atlas.eps_act = options.eps_act;
  atlas.eps_lambda = options.eps_lambda;
  atlas.model_hash = model_hash(model);
  const auto points = grid_points(window, resolution);
  atlas.samples.reserve(points.size());
  const auto row = static_cast<std::size_t>(resolution.front());
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::optional<Vector> warm;
    if (options.warm_start && p % row != 0 && atlas.samples.back().feasible) warm = atlas.samples.back().U_star;
    atlas.samples.push_back(analyse_state(model, points[p], warm, options, stats));
    if (options.progress) options.progress(p + 1, points.size());
  }
  return atlas;
}

/// Samples sharing one saturated subset that satisfies the shared-law condition.
struct FeedbackClass {
  IndexSet subset;
  Vector u_star;
  std::vector<IndexSet> member_active_sets;
  std::vector<Vector> cloud;
  /// some member has a zero multiplier on a row of the subset
  bool weakly_active = false;
  /// max |first input - u_star| over the cloud
  double max_deviation = 0.0;
  /// members whose first input disagreed with u_star by more than 1e-6 (kept out of the cloud)
  std::size_t inconsistent = 0;
};

inline std::vector<FeedbackClass> group_by_subset(const SampleAtlas& atlas, const SystemModel& model) {
  const int q_u = model.input_rows();
  const Matrix& G = model.input_polytope.A;
  const Vector& w = model.input_polytope.b;
  std::map<IndexSet, FeedbackClass> classes;
  for (const auto& s : atlas.samples) {
    if (!s.feasible) continue;
    const IndexSet subset = saturated_subset(s.active, q_u);
    if (!check_feedback_condition(subset, G, model.input_dim)) continue;
    auto [it, inserted] = classes.try_emplace(subset);
    FeedbackClass& c = it->second;
    if (inserted) {
      c.subset = subset;
      c.u_star = feedback_from_subset(subset, G, w);
    }
    const double dev = (s.u_star - c.u_star).cwiseAbs().maxCoeff();
    if (dev > 1e-6) {
      ++c.inconsistent;
      continue;
    }
    c.max_deviation = std::max(c.max_deviation, dev);
    c.cloud.push_back(s.x0);
    if (std::find(c.member_active_sets.begin(), c.member_active_sets.end(), s.active) == c.member_active_sets.end())
      c.member_active_sets.push_back(s.active);
    for (int i : subset)
      if (std::find(s.weak.begin(), s.weak.end(), i) != s.weak.end()) c.weakly_active = true;
  }
  std::vector<FeedbackClass> out;
  for (auto& [key, c] : classes) {
    std::sort(c.member_active_sets.begin(), c.member_active_sets.end());
    out.push_back(std::move(c));
  }
  return out;
}

inline Json index_set_to_json(const IndexSet& s) { return one_based(s); }

inline IndexSet index_set_from_json(const Json& j) {
  IndexSet out;
  for (const auto& v : j) {
    const int i = v.get<int>();
    if (i < 1) throw FormatError("constraint indices are 1-based");
    out.push_back(i - 1);
  }
  return out;
}

inline Json atlas_to_json(const SampleAtlas& atlas, const Json& config = Json::object()) {
  const auto sets = atlas.distinct_active_sets();
  Json jsets = Json::array();
  for (const auto& s : sets) jsets.push_back(index_set_to_json(s));
  Json samples = Json::array();
  for (const auto& s : atlas.samples) {
    Json r = {{"x0", to_json(s.x0)}, {"status", to_string(s.status)}, {"feasible", s.feasible}};
    if (s.feasible) {
      r["active"] = index_set_to_json(s.active);
      r["weak"] = index_set_to_json(s.weak);
      r["active_set_id"] = std::lower_bound(sets.begin(), sets.end(), s.active) - sets.begin();
      r["U_star"] = to_json(s.U_star);
      r["u_star"] = to_json(s.u_star);
      r["V_star"] = s.V_star;
      r["kkt_residual"] = s.kkt_residual;
      r["regular"] = s.regular;
    }
    samples.push_back(std::move(r));
  }
  return {{"model_hash", atlas.model_hash},
          {"window", window_to_json(atlas.window)},
          {"resolution", atlas.resolution},
          {"tolerances", {{"eps_act", atlas.eps_act}, {"eps_lambda", atlas.eps_lambda}}},
          {"config", config},
          {"active_sets", jsets},
          {"samples", samples}};
}

inline SampleAtlas atlas_from_json(const Json& j) {
  try {
    SampleAtlas atlas;
    atlas.model_hash = j.at("model_hash").get<std::string>();
    atlas.window = window_from_json(j.at("window"));
    atlas.resolution = j.at("resolution").get<std::vector<int>>();
    atlas.eps_act = j.at("tolerances").at("eps_act").get<double>();
    atlas.eps_lambda = j.at("tolerances").at("eps_lambda").get<double>();
    for (const auto& r : j.at("samples")) {
      AtlasSample s;
      s.x0 = vector_from_json(r.at("x0"), "sample.x0");
      s.feasible = r.at("feasible").get<bool>();
      const auto status = r.at("status").get<std::string>();
      for (auto st : {SolveStatus::Converged, SolveStatus::Infeasible, SolveStatus::MaxIter, SolveStatus::RegularityFailure})
        if (status == to_string(st)) s.status = st;
      if (s.feasible) {
        s.active = index_set_from_json(r.at("active"));
        s.weak = index_set_from_json(r.at("weak"));
        s.U_star = vector_from_json(r.at("U_star"), "sample.U_star");
        s.u_star = vector_from_json(r.at("u_star"), "sample.u_star");
        s.V_star = r.at("V_star").get<double>();
        s.kkt_residual = r.at("kkt_residual").get<double>();
        s.regular = r.at("regular").get<bool>();
      }
      atlas.samples.push_back(std::move(s));
    }
    return atlas;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed atlas file: ") + e.what());
  }
}

/// x1, ..., xn, feasible, active_set_id, u_star (first input component per column u1..um).
inline std::string atlas_to_csv(const SampleAtlas& atlas) {
  const auto sets = atlas.distinct_active_sets();
  std::ostringstream os;
  os.precision(17);
  const auto n = atlas.window.dim();
  for (Eigen::Index i = 0; i < n; ++i) os << 'x' << i + 1 << ',';
  os << "feasible,active_set_id";
  Eigen::Index m = 0;
  for (const auto& s : atlas.samples)
    if (s.feasible) m = std::max(m, s.u_star.size());
  for (Eigen::Index i = 0; i < m; ++i) os << (m == 1 ? std::string(",u_star") : ",u_star" + std::to_string(i + 1));
  os << '\n';
  for (const auto& s : atlas.samples) {
    for (Eigen::Index i = 0; i < n; ++i) os << s.x0[i] << ',';
    if (s.feasible) {
      os << "1," << (std::lower_bound(sets.begin(), sets.end(), s.active) - sets.begin());
      for (Eigen::Index i = 0; i < m; ++i) os << ',' << s.u_star[i];
    } else {
      os << "0,-1";
      for (Eigen::Index i = 0; i < m; ++i) os << ',';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rnmpc

#endif  // RNMPC_ATLAS_HPP_
