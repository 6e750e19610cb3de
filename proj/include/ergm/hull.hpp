#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergm/error.hpp"

namespace ergm {

enum class RowSense { le, eq, ge };
enum class LpStatus { optimal, infeasible, unbounded };

// maximize (or minimize) c'x  subject to  A x (sense) b,  x >= 0.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd A;
  std::vector<RowSense> senses;
  Eigen::VectorXd b;
  bool maximize = true;
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double value = 0;
  Eigen::VectorXd x;
  int pivots = 0;
};

namespace detail {

// Dense tableau simplex. Columns: structural, slack/surplus, artificial, rhs.
class Tableau {
 public:
  static constexpr double kTol = 1e-9;

  Tableau(const LinearProgram& lp) : n_(static_cast<int>(lp.objective.size())), m_(static_cast<int>(lp.b.size())) {
    int slacks = 0, arts = 0;
    for (int r = 0; r < m_; ++r) {
      const RowSense s = effective_sense(lp, r);
      if (s != RowSense::eq) ++slacks;
      if (s != RowSense::le) ++arts;
    }
    art_begin_ = n_ + slacks;
    cols_ = art_begin_ + arts;
    T_ = Eigen::MatrixXd::Zero(m_ + 1, cols_ + 1);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    int sc = n_, ac = art_begin_;
    for (int r = 0; r < m_; ++r) {
      const double sign = lp.b[r] < 0 ? -1.0 : 1.0;
      T_.row(r).head(n_) = sign * lp.A.row(r);
      T_(r, cols_) = sign * lp.b[r];
      const RowSense s = effective_sense(lp, r);
      if (s == RowSense::le) {
        T_(r, sc) = 1;
        basis_[static_cast<std::size_t>(r)] = sc++;
      } else if (s == RowSense::ge) {
        T_(r, sc++) = -1;
        T_(r, ac) = 1;
        basis_[static_cast<std::size_t>(r)] = ac++;
      } else {
        T_(r, ac) = 1;
        basis_[static_cast<std::size_t>(r)] = ac++;
      }
    }
  }

  LpSolution solve(const LinearProgram& lp) {
    LpSolution out;
    // phase 1: minimize the sum of artificials
    if (art_begin_ < cols_) {
      set_objective([&](int j) { return j >= art_begin_ ? 1.0 : 0.0; });
      if (!optimize(cols_)) throw NumericalError("simplex phase 1 reported unbounded");
      if (-T_(m_, cols_) > 1e-7 * std::max(1.0, T_.col(cols_).head(m_).cwiseAbs().maxCoeff())) {
        out.status = LpStatus::infeasible;
        out.pivots = pivots_;
        return out;
      }
      drive_out_artificials();
    }
    // phase 2 on the structural and slack columns (minimization form)
    const double sgn = lp.maximize ? -1.0 : 1.0;
    set_objective([&](int j) { return j < n_ ? sgn * lp.objective[j] : 0.0; });
    if (!optimize(art_begin_)) {
      out.status = LpStatus::unbounded;
      out.pivots = pivots_;
      return out;
    }
    out.status = LpStatus::optimal;
    out.x = Eigen::VectorXd::Zero(n_);
    for (int r = 0; r < m_; ++r)
      if (basis_[static_cast<std::size_t>(r)] < n_) out.x[basis_[static_cast<std::size_t>(r)]] = T_(r, cols_);
    out.value = lp.objective.dot(out.x);
    out.pivots = pivots_;
    return out;
  }

 private:
  static RowSense effective_sense(const LinearProgram& lp, int r) {
    const RowSense s = lp.senses[static_cast<std::size_t>(r)];
    if (lp.b[r] >= 0 || s == RowSense::eq) return s;
    return s == RowSense::le ? RowSense::ge : RowSense::le;
  }

  template <class F>
  void set_objective(F cost) {
    T_.row(m_).setZero();
    for (int j = 0; j < cols_; ++j) T_(m_, j) = cost(j);
    // price out the basic columns
    for (int r = 0; r < m_; ++r) {
      const int bj = basis_[static_cast<std::size_t>(r)];
      if (bj >= 0 && T_(m_, bj) != 0) T_.row(m_) -= T_(m_, bj) * T_.row(r);
    }
  }

  void pivot(int r, int c) {
    T_.row(r) /= T_(r, c);
    for (int i = 0; i <= m_; ++i)
      if (i != r && T_(i, c) != 0) T_.row(i) -= T_(i, c) * T_.row(r);
    basis_[static_cast<std::size_t>(r)] = c;
    ++pivots_;
  }

  // Minimizes the bottom row over columns [0, active). Dantzig pricing, with
  // Bland's rule after a run of degenerate pivots. False when unbounded.
  bool optimize(int active) {
    int degenerate_run = 0;
    for (;;) {
      const bool bland = degenerate_run > 50;
      int enter = -1;
      double best = -kTol;
      for (int j = 0; j < active; ++j) {
        if (T_(m_, j) < best) {
          enter = j;
          if (bland) break;
          best = T_(m_, j);
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m_; ++r) {
        const double a = T_(r, enter);
        if (a <= kTol) continue;
        const double q = T_(r, cols_) / a;
        if (q < ratio - kTol ||
            (q <= ratio + kTol && leave >= 0 && basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
          ratio = std::min(ratio, q);
          leave = r;
        }
      }
      if (leave < 0) return false;
      degenerate_run = ratio <= kTol ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
  }

  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < art_begin_) continue;
      int c = -1;
      for (int j = 0; j < art_begin_; ++j)
        if (std::abs(T_(r, j)) > kTol) {
          c = j;
          break;
        }
      if (c >= 0) pivot(r, c);
      // otherwise the row is redundant; its artificial stays basic at zero
    }
    // artificial columns never re-enter
    for (int j = art_begin_; j < cols_; ++j) T_.col(j).setZero();
    for (int r = 0; r < m_; ++r)
      if (basis_[static_cast<std::size_t>(r)] >= art_begin_) T_(r, basis_[static_cast<std::size_t>(r)]) = 1;
  }

  int n_, m_;
  int art_begin_ = 0, cols_ = 0;
  Eigen::MatrixXd T_;
  std::vector<int> basis_;
  int pivots_ = 0;
};

}  // namespace detail

inline LpSolution simplex_solve(const LinearProgram& lp) {
  const auto n = lp.objective.size();
  if (lp.A.cols() != n || lp.A.rows() != lp.b.size() || static_cast<Eigen::Index>(lp.senses.size()) != lp.b.size())
    throw UsageError("linear program dimensions are inconsistent");
  detail::Tableau t(lp);
  return t.solve(lp);
}

// Largest t >= 0 with center + t (x - center) in the convex hull of the rows
// of `points`. +Inf when x equals the center; 0 when the center itself is
// outside the hull.
inline double boundary_multiplier(const Eigen::MatrixXd& points, const Eigen::VectorXd& x, const Eigen::VectorXd& center) {
  const Eigen::Index S = points.rows(), p = points.cols();
  if (S < 1 || p < 1) throw UsageError("boundary_multiplier needs a non-empty point cloud");
  if (x.size() != p || center.size() != p) throw UsageError("query point has the wrong dimension");
  const Eigen::VectorXd dir = x - center;
  if (dir.cwiseAbs().maxCoeff() == 0) return HUGE_VAL;
  // variables: lambda_1..lambda_S, t
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(S + 1);
  lp.objective[S] = 1;
  lp.A = Eigen::MatrixXd::Zero(p + 1, S + 1);
  lp.A.topLeftCorner(p, S) = points.transpose();
  lp.A.col(S).head(p) = -dir;
  lp.A.row(p).head(S).setOnes();
  lp.b.resize(p + 1);
  lp.b.head(p) = center;
  lp.b[p] = 1;
  lp.senses.assign(static_cast<std::size_t>(p + 1), RowSense::eq);
  const LpSolution sol = simplex_solve(lp);
  if (sol.status == LpStatus::infeasible) return 0;
  if (sol.status == LpStatus::unbounded) return HUGE_VAL;
  return sol.value;
}

inline Eigen::VectorXd centroid(const Eigen::MatrixXd& points) { return points.colwise().mean().transpose(); }

// Membership with the boundary band: gamma >= 1 - 1e-7 counts as inside.
inline bool in_hull(const Eigen::MatrixXd& points, const Eigen::VectorXd& x) {
  return boundary_multiplier(points, x, centroid(points)) >= 1 - 1e-7;
}

// Moves x toward the center until it is at fraction `depth` of the way to
// the hull boundary; points already that deep are returned unchanged.
inline Eigen::VectorXd scale_into_hull(const Eigen::MatrixXd& points, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& center, double depth = 0.95) {
  if (!(depth > 0 && depth <= 1)) throw UsageError("hull depth must be in (0, 1]");
  const double g = boundary_multiplier(points, x, center);
  if (g >= (1 / depth) * (1 - 1e-7)) return x;
  return center + depth * g * (x - center);
}

}  // namespace ergm
