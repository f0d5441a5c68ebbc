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

#ifndef RNMPC_QP_HPP_
#define RNMPC_QP_HPP_

/**
 * @file
 * @brief Dense strictly convex QP solver used for the SQP subproblems.
 *
 *   min_d 0.5 d' H d + g' d   s.t.   A d <= b
 *
 * Dual active-set method in the style of Goldfarb and Idnani: start from the unconstrained
 * minimizer and add violated rows one at a time while keeping the multipliers of the working
 * set nonnegative. Infeasibility shows up as a violated row that cannot be reduced by any
 * admissible dual step. Problem sizes here are tiny, so each step solves the reduced KKT
 * system directly instead of updating factorizations.
 */

#include <rnmpc/core.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace rnmpc {

enum class QPStatus { Optimal, Infeasible, NotConvex, MaxIter };

inline const char* to_string(QPStatus s) {
  switch (s) {
    case QPStatus::Optimal: return "optimal";
    case QPStatus::Infeasible: return "infeasible";
    case QPStatus::NotConvex: return "not_convex";
    case QPStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

struct QPResult {
  QPStatus status = QPStatus::MaxIter;
  Vector step;
  Vector multipliers;  ///< one per row of A, zero off the active set
  IndexSet active;     ///< sorted
  int iterations = 0;
};

struct QPOptions {
  double feasibility_tol = 1e-12;  ///< relative to 1 + |b_i|
  int max_iterations = 0;          ///< 0 selects 10 (n + rows)
};

namespace detail {

class DualActiveSet {
public:
  DualActiveSet(const Matrix& H, const Vector& g, const Matrix& A, const Vector& b)
      : H_(H), g_(g), A_(A), b_(b), llt_(H) {}

  bool convex() const {
    return llt_.info() == Eigen::Success && (llt_.matrixL().toDenseMatrix().diagonal().array() > 0).all();
  }

  // Minimizer of the equality-constrained problem on `working`, multipliers in `lam`.
  void solve_equality(const IndexSet& working, Vector& d, Vector& lam) const {
    const Eigen::Index k = static_cast<Eigen::Index>(working.size());
    const Vector Hg = llt_.solve(g_);
    if (k == 0) {
      d = -Hg;
      lam.resize(0);
      return;
    }
    const Matrix Nt = rows(working);
    const Matrix HN = llt_.solve(Nt.transpose());
    const Matrix S = Nt * HN;
    Vector bw(k);
    for (Eigen::Index i = 0; i < k; ++i) bw[i] = b_[working[static_cast<std::size_t>(i)]];
    // d = -H^-1 (g + N lam),  N' d = b_W  =>  S lam = -(b_W + N' H^-1 g)
    lam = S.ldlt().solve(-(bw + Nt * Hg));
    d = -(Hg + HN * lam);
  }

  QPResult run(const std::optional<IndexSet>& warm, const QPOptions& opt) {
    QPResult res;
    const Eigen::Index n = H_.rows();
    const Eigen::Index q = A_.rows();
    if (!convex()) {
      res.status = QPStatus::NotConvex;
      return res;
    }
    const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(10 * (n + q)) + 10;

    IndexSet working;
    Vector d, lam;
    if (warm && !warm->empty()) {
      working = independent_subset(*warm);
      // Drop negative multipliers until the working set is dual feasible.
      for (;;) {
        solve_equality(working, d, lam);
        if (working.empty()) break;
        Eigen::Index worst;
        if (lam.minCoeff(&worst) >= 0.0) break;
        working.erase(working.begin() + worst);
      }
    } else {
      solve_equality(working, d, lam);
    }

    for (int iter = 0; iter < max_iter; ++iter) {
      res.iterations = iter + 1;
      // Most violated row (scaled) outside the working set.
      int p = -1;
      double worst = 0.0;
      for (Eigen::Index i = 0; i < q; ++i) {
        if (std::find(working.begin(), working.end(), static_cast<int>(i)) != working.end()) continue;
        const double viol = A_.row(i).dot(d) - b_[i];
        const double tol = opt.feasibility_tol * (1.0 + std::abs(b_[i]));
        if (viol <= tol) continue;
        const double scaled = viol / std::max(1e-300, A_.row(i).norm());
        if (scaled > worst) {
          worst = scaled;
          p = static_cast<int>(i);
        }
      }
      if (p < 0) {
        finish(working, d, lam, res);
        return res;
      }

      const Vector ap = A_.row(p).transpose();
      const double ap_norm_h = ap.dot(llt_.solve(ap));
      double tp = 0.0;
      bool added = false;
      for (int inner = 0; inner < max_iter && !added; ++inner) {
        Vector z, r;
        directions(working, ap, z, r);
        const double zHz = -ap.dot(z);
        // Largest dual step keeping working multipliers nonnegative.
        double t_partial = std::numeric_limits<double>::infinity();
        Eigen::Index drop = -1;
        for (Eigen::Index j = 0; j < r.size(); ++j) {
          if (r[j] < 0.0) {
            const double ratio = lam[j] / -r[j];
            if (ratio < t_partial) {
              t_partial = ratio;
              drop = j;
            }
          }
        }
        const double viol = ap.dot(d) - b_[p];
        const bool primal_move = zHz > 1e-13 * ap_norm_h;
        const double t_full = primal_move ? viol / zHz : std::numeric_limits<double>::infinity();
        const double t = std::min(t_partial, t_full);
        if (!std::isfinite(t)) {
          res.status = QPStatus::Infeasible;
          res.step = d;
          return res;
        }
        if (primal_move) d += t * z;
        if (r.size() > 0) lam += t * r;
        tp += t;
        if (primal_move && t_full <= t_partial) {
          working.push_back(p);
          lam.conservativeResize(lam.size() + 1);
          lam[lam.size() - 1] = tp;
          added = true;
        } else {
          working.erase(working.begin() + drop);
          Vector kept(lam.size() - 1);
          for (Eigen::Index j = 0, k = 0; j < lam.size(); ++j)
            if (j != drop) kept[k++] = lam[j];
          lam = std::move(kept);
        }
      }
      if (!added) break;
    }
    res.status = QPStatus::MaxIter;
    res.step = d;
    return res;
  }

private:
  Matrix rows(const IndexSet& idx) const {
    Matrix out(static_cast<Eigen::Index>(idx.size()), A_.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = A_.row(idx[i]);
    return out;
  }

  IndexSet independent_subset(const IndexSet& candidates) const {
    IndexSet kept;
    for (int i : candidates) {
      if (i < 0 || i >= A_.rows()) continue;
      if (std::find(kept.begin(), kept.end(), i) != kept.end()) continue;
      IndexSet trial = kept;
      trial.push_back(i);
      Eigen::FullPivLU<Matrix> lu(rows(trial));
      lu.setThreshold(1e-10);
      if (lu.rank() == static_cast<Eigen::Index>(trial.size())) kept = std::move(trial);
    }
    return kept;
  }

  // H z + N r = -a_p, N' z = 0
  void directions(const IndexSet& working, const Vector& ap, Vector& z, Vector& r) const {
    const Vector Ha = llt_.solve(ap);
    if (working.empty()) {
      z = -Ha;
      r.resize(0);
      return;
    }
    const Matrix Nt = rows(working);
    const Matrix HN = llt_.solve(Nt.transpose());
    const Matrix S = Nt * HN;
    r = S.ldlt().solve(-(Nt * Ha));
    z = -(Ha + HN * r);
  }

  // Polish by re-solving the equality problem on the final working set.
  void finish(IndexSet working, Vector d, Vector lam, QPResult& res) const {
    Vector d2, lam2;
    solve_equality(working, d2, lam2);
    bool ok = d2.allFinite() && lam2.allFinite();
    if (ok) {
      for (Eigen::Index i = 0; i < A_.rows(); ++i)
        if (A_.row(i).dot(d2) - b_[i] > 1e-9 * (1.0 + std::abs(b_[i]))) ok = false;
      if (lam2.size() > 0 && lam2.minCoeff() < -1e-9 * (1.0 + lam2.cwiseAbs().maxCoeff())) ok = false;
    }
    if (ok) {
      d = std::move(d2);
      lam = std::move(lam2);
    }
    std::vector<std::pair<int, double>> pairs;
    for (std::size_t i = 0; i < working.size(); ++i) pairs.emplace_back(working[i], lam[static_cast<Eigen::Index>(i)]);
    std::sort(pairs.begin(), pairs.end());
    res.status = QPStatus::Optimal;
    res.step = std::move(d);
    res.multipliers = Vector::Zero(A_.rows());
    res.active.clear();
    for (const auto& [i, l] : pairs) {
      res.multipliers[i] = std::max(0.0, l);
      res.active.push_back(i);
    }
  }

  const Matrix& H_;
  const Vector& g_;
  const Matrix& A_;
  const Vector& b_;
  Eigen::LLT<Matrix> llt_;
};

}  // namespace detail

/// Solves min 0.5 d'Hd + g'd s.t. A d <= b for positive definite H.
inline QPResult solve_qp(const Matrix& H, const Vector& g, const Matrix& A, const Vector& b,
                         const std::optional<IndexSet>& warm_active = std::nullopt,
                         const QPOptions& options = {}) {
  detail::require(H.rows() == H.cols(), "solve_qp: H must be square");
  detail::require_dim(g.size(), H.rows(), "solve_qp: g");
  detail::require(A.rows() == 0 || A.cols() == H.rows(), "solve_qp: A has wrong column count");
  detail::require_dim(b.size(), A.rows(), "solve_qp: b");
  detail::DualActiveSet solver(H, g, A, b);
  return solver.run(warm_active, options);
}

}  // namespace rnmpc

#endif  // RNMPC_QP_HPP_
