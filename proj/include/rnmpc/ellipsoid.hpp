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

#ifndef RNMPC_ELLIPSOID_HPP_
#define RNMPC_ELLIPSOID_HPP_

/**
 * @file
 * @brief Ellipsoids {x : (x - c)' E (x - c) <= 1}, sampling-based verification of a feedback law
 * on them, and greedy inner fitting to a feedback class's sample cloud.
 */

#include <rnmpc/atlas.hpp>
#include <rnmpc/core.hpp>
#include <rnmpc/model.hpp>
#include <rnmpc/ocp.hpp>
#include <rnmpc/sqp.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace rnmpc {

struct Ellipsoid {
  Matrix E;
  Vector center;

  double value(const Vector& x) const {
    const Vector d = x - center;
    return d.dot(E * d);
  }
  /// Closed set: the boundary counts as inside.
  bool contains(const Vector& x) const { return value(x) <= 1.0; }
  /// Half-widths of the axis-aligned bounding box, sqrt(diag(E^-1)).
  Vector half_widths() const { return E.inverse().diagonal().cwiseSqrt(); }
  /// Semi-axis lengths, ascending.
  Vector semi_axes() const {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(E, Eigen::EigenvaluesOnly);
    Vector out = eig.eigenvalues().cwiseInverse().cwiseSqrt();
    std::sort(out.data(), out.data() + out.size());
    return out;
  }
};

/// Symmetric to 1e-12 (relative to the largest entry) and Cholesky succeeds.
inline bool is_valid_ellipsoid(const Ellipsoid& e) {
  if (e.E.rows() != e.E.cols() || e.E.rows() != e.center.size() || e.E.rows() == 0) return false;
  if (!e.E.allFinite() || !e.center.allFinite()) return false;
  const double scale = std::max(1.0, e.E.cwiseAbs().maxCoeff());
  if ((e.E - e.E.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  return Eigen::LLT<Matrix>(e.E).info() == Eigen::Success;
}

inline bool ellipsoid_contains(const Ellipsoid& e, const Vector& x) {
  detail::require_dim(x.size(), e.center.size(), "ellipsoid_contains");
  return e.contains(x);
}

/// Uniform point generator: x = c + L^{-T} z with E = L L' and z uniform in the unit ball.
class EllipsoidSampler {
public:
  EllipsoidSampler(const Ellipsoid& e, std::uint64_t seed) : center_(e.center), rng_(seed) {
    const Eigen::LLT<Matrix> llt(e.E);
    detail::require(llt.info() == Eigen::Success, "ellipsoid matrix is not positive definite");
    map_ = llt.matrixU().solve(Matrix::Identity(e.E.rows(), e.E.cols()));
  }

  /// Point of the unit ball; scaling it by gamma and mapping gives the same draw in the shrunk ellipsoid.
  Vector unit_ball() {
    const auto n = center_.size();
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal_(rng_);
    const double norm = z.norm();
    const double radius = std::pow(uniform_(rng_), 1.0 / static_cast<double>(n));
    return z * (radius / std::max(norm, std::numeric_limits<double>::min()));
  }

  Vector map(const Vector& z) const { return center_ + map_ * z; }
  Vector operator()() { return map(unit_ball()); }

private:
  Vector center_;
  Matrix map_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct VerificationReport {
  int samples_tested = 0;
  int violations = 0;
  int solver_failures = 0;
  double worst_margin = 0.0;
  bool verified = false;
  std::string diagnostic;
};

struct VerifyOptions {
  double law_tolerance = 1e-6;
  /// stop at the first violation (used while searching for the largest verifiable scale)
  bool stop_at_first_violation = false;
  SolverOptions solver;
};

/**
 * Draws n_samples states uniformly in e and solves the full OCP at each. A sample violates when the
 * solve does not converge or its first input differs from u_expected by more than the tolerance.
 */
inline VerificationReport verify_ellipsoid(const Ellipsoid& e, const Vector& u_expected, const SystemModel& model,
                                           int n_samples, std::uint64_t seed, const VerifyOptions& options = {},
                                           SolverStats* stats = nullptr) {
  detail::require(n_samples >= 1, "verify_ellipsoid: n_samples must be at least 1");
  detail::require_dim(e.center.size(), model.state_dim, "verify_ellipsoid: center");
  detail::require_dim(u_expected.size(), model.input_dim, "verify_ellipsoid: u_expected");
  VerificationReport report;
  EllipsoidSampler sampler(e, seed);
  for (int k = 0; k < n_samples; ++k) {
    const Vector x = sampler();
    const OCPInstance ocp(model, x);
    const NLPSolution sol = solve_ocp(ocp, std::nullopt, options.solver, stats);
    ++report.samples_tested;
    bool bad = false;
    if (!sol.converged()) {
      ++report.solver_failures;
      report.worst_margin = std::numeric_limits<double>::infinity();
      if (report.diagnostic.empty()) report.diagnostic = std::string("solver status ") + to_string(sol.status);
      bad = true;
    } else {
      const double margin = (sol.feedback(model.input_dim) - u_expected).cwiseAbs().maxCoeff();
      report.worst_margin = std::max(report.worst_margin, margin);
      bad = margin > options.law_tolerance;
      if (bad && report.diagnostic.empty()) report.diagnostic = "feedback law differs from the expected one";
    }
    if (bad) {
      ++report.violations;
      if (options.stop_at_first_violation) break;
    }
  }
  report.verified = report.violations == 0;
  return report;
}

struct FitOptions {
  double r_min = 1e-3;
  /// minimum fraction of the class cloud a new ellipsoid must add
  double min_gain = 0.02;
  /// final radius factor applied after the scale search
  double shrink = 0.98;
  int verify_samples = 2000;
  /// samples per trial during the scale search
  int search_samples = 200;
  int bisection_steps = 8;
  /// centers tried per greedy round (subsampled from the uncovered cloud)
  int max_centers = 120;
  std::uint64_t seed = 1;
  VerifyOptions verify;
};

struct FittedEllipsoid {
  Ellipsoid ellipsoid;
  VerificationReport report;
  std::uint64_t seed = 0;
  /// cloud points newly covered when it was added
  std::size_t gain = 0;
};

namespace detail {

/// Candidate unit shapes E0 around a center; the ellipsoid is then {q_E0 <= t}.
inline std::vector<Matrix> candidate_shapes(const std::vector<Vector>& cloud, const std::vector<Vector>& local) {
  const auto n = cloud.front().size();
  std::vector<Matrix> shapes{Matrix::Identity(n, n)};
  auto from_cov = [&](const std::vector<Vector>& pts) {
    if (pts.size() <= static_cast<std::size_t>(n)) return;
    Vector mean = Vector::Zero(n);
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Matrix C = Matrix::Zero(n, n);
    for (const auto& p : pts) C += (p - mean) * (p - mean).transpose();
    C /= static_cast<double>(pts.size());
    C.diagonal().array() += 1e-9 * std::max(1.0, C.trace());
    if (Eigen::LLT<Matrix>(C).info() == Eigen::Success) shapes.push_back(C.inverse());
  };
  from_cov(cloud);
  from_cov(local);
  if (n == 2) {
    constexpr int angles = 12;
    for (int a = 0; a < angles; ++a) {
      const double th = std::numbers::pi * a / angles;
      Matrix R(2, 2);
      R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      for (double ratio : {1.5, 2.0, 3.0, 4.0, 6.0}) {
        const Vector d = Eigen::Vector2d(1.0, ratio * ratio);
        shapes.push_back(R * d.asDiagonal() * R.transpose());
      }
    }
  }
  return shapes;
}

inline Ellipsoid scaled(const Ellipsoid& e, double radius_factor) {
  return {e.E / (radius_factor * radius_factor), e.center};
}

}  // namespace detail

/**
 * Greedy inner fitting. Each round picks, over candidate centers (uncovered cloud points, the
 * deepest one first) and candidate shapes (cloud and local second moments, identity, and for
 * n = 2 a fan of orientations and aspect ratios), the largest ellipsoid free of non-class atlas
 * samples and contained in the cloud's bounding box; the one covering the most uncovered cloud
 * points wins. Its radius is then bisected against verify_ellipsoid, shrunk by options.shrink,
 * and verified with options.verify_samples fresh samples. Rounds stop when max_ellipsoids is
 * reached or an ellipsoid adds less than min_gain of the cloud.
 */
inline std::vector<FittedEllipsoid> fit_inner_ellipsoids(const FeedbackClass& cls, const SystemModel& model,
                                                         const SampleAtlas& atlas, int max_ellipsoids,
                                                         const FitOptions& options = {},
                                                         SolverStats* stats = nullptr) {
  detail::require(!cls.cloud.empty(), "fit_inner_ellipsoids: empty sample cloud");
  detail::require(max_ellipsoids >= 0, "fit_inner_ellipsoids: negative ellipsoid budget");
  const auto n = model.state_dim;
  const auto& cloud = cls.cloud;

  // Grid spacing and a box a little larger than the cloud.
  Vector spacing(n);
  for (Eigen::Index i = 0; i < n; ++i)
    spacing[i] = (atlas.window.upper[i] - atlas.window.lower[i]) / (atlas.resolution[static_cast<std::size_t>(i)] - 1);
  Vector lo = cloud.front(), hi = cloud.front();
  for (const auto& p : cloud) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  lo -= spacing;
  hi += spacing;
  lo = lo.cwiseMax(atlas.window.lower);
  hi = hi.cwiseMin(atlas.window.upper);

  // Obstacles: every atlas sample near the cloud that is not one of its members.
  std::vector<Vector> obstacles;
  {
    std::vector<Vector> sorted = cloud;
    auto less = [](const Vector& a, const Vector& b) {
      return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    };
    std::sort(sorted.begin(), sorted.end(), less);
    for (const auto& s : atlas.samples) {
      if (((s.x0 - lo).array() < -spacing.array()).any() || ((s.x0 - hi).array() > spacing.array()).any()) continue;
      if (!std::binary_search(sorted.begin(), sorted.end(), s.x0, less)) obstacles.push_back(s.x0);
    }
  }

  auto clearance = [&](const Vector& x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& o : obstacles) d = std::min(d, ((o - x).array() / spacing.array()).matrix().squaredNorm());
    for (Eigen::Index i = 0; i < n; ++i)
      d = std::min(d, std::pow(std::min(x[i] - lo[i], hi[i] - x[i]) / spacing[i], 2));
    return d;
  };

  std::vector<bool> covered(cloud.size(), false);
  std::vector<FittedEllipsoid> result;
  const auto min_gain = static_cast<std::size_t>(std::ceil(options.min_gain * static_cast<double>(cloud.size())));

  for (int round = 0; round < max_ellipsoids; ++round) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if (!covered[i]) open.push_back(i);
    if (open.empty()) break;

    // Centers: deepest uncovered point first, then an even subsample.
    std::vector<std::size_t> centers;
    {
      std::size_t deepest = open.front();
      double best = -1.0;
      for (std::size_t i : open) {
        const double c = clearance(cloud[i]);
        if (c > best) {
          best = c;
          deepest = i;
        }
      }
      centers.push_back(deepest);
      const std::size_t stride = std::max<std::size_t>(1, open.size() / static_cast<std::size_t>(options.max_centers));
      for (std::size_t k = 0; k < open.size(); k += stride) centers.push_back(open[k]);
    }

    std::vector<Vector> uncovered;
    for (std::size_t i : open) uncovered.push_back(cloud[i]);

    Ellipsoid best_e;
    std::size_t best_count = 0;
    for (std::size_t ci : centers) {
      const Vector& c = cloud[ci];
      std::vector<Vector> local;
      for (const auto& p : uncovered)
        if (((p - c).array().abs() <= 0.15 * (hi - lo).array()).all()) local.push_back(p);
      for (const Matrix& E0 : detail::candidate_shapes(cloud, local)) {
        double t = std::numeric_limits<double>::infinity();
        for (const auto& o : obstacles) t = std::min(t, (o - c).dot(E0 * (o - c)));
        const Vector hw2 = E0.inverse().diagonal();
        for (Eigen::Index i = 0; i < n; ++i) {
          const double room = std::min(c[i] - lo[i], hi[i] - c[i]);
          t = std::min(t, room * room / hw2[i]);
        }
        if (!(t > 0.0) || !std::isfinite(t)) continue;
        std::size_t count = 0;
        for (const auto& p : uncovered)
          if ((p - c).dot(E0 * (p - c)) < t) ++count;
        if (count > best_count) {
          best_count = count;
          best_e = {E0 / t, c};
        }
      }
    }
    if (best_count == 0) {
      // Isolated point: try the smallest admissible ball.
      const Vector& c = cloud[centers.front()];
      best_e = {Matrix::Identity(n, n) / (options.r_min * options.r_min), c};
    }

    // Largest verifiable radius factor in (0, 1].
    VerifyOptions quick = options.verify;
    quick.stop_at_first_violation = true;
    const std::uint64_t round_seed = options.seed + 1000003ULL * static_cast<std::uint64_t>(round + 1);
    auto passes = [&](double factor, int samples, std::uint64_t seed) {
      return verify_ellipsoid(detail::scaled(best_e, factor), cls.u_star, model, samples, seed, quick, stats).verified;
    };
    double factor = 0.0;
    if (passes(1.0, options.search_samples, round_seed)) {
      factor = 1.0;
    } else {
      double a = 0.0, b = 1.0;
      for (int k = 0; k < options.bisection_steps; ++k) {
        const double mid = 0.5 * (a + b);
        (passes(mid, options.search_samples, round_seed + static_cast<std::uint64_t>(k) + 1) ? a : b) = mid;
      }
      factor = a;
    }

    FittedEllipsoid fitted;
    bool accepted = false;
    for (int attempt = 0; attempt < 4 && factor > 0.0; ++attempt) {
      factor *= options.shrink;
      const Ellipsoid e = detail::scaled(best_e, factor);
      if (e.semi_axes()[0] < options.r_min) break;
      const std::uint64_t seed = round_seed + 7919ULL * static_cast<std::uint64_t>(attempt + 1);
      VerifyOptions full = options.verify;
      full.stop_at_first_violation = false;
      VerificationReport report = verify_ellipsoid(e, cls.u_star, model, options.verify_samples, seed, full, stats);
      if (report.verified) {
        fitted = {e, report, seed, 0};
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    std::size_t gain = 0;
    for (std::size_t i : open)
      if (fitted.ellipsoid.contains(cloud[i])) ++gain;
    if (gain < std::max<std::size_t>(1, min_gain)) break;
    for (std::size_t i : open)
      if (fitted.ellipsoid.contains(cloud[i])) covered[i] = true;
    fitted.gain = gain;
    result.push_back(std::move(fitted));
  }
  return result;
}

}  // namespace rnmpc

#endif  // RNMPC_ELLIPSOID_HPP_
