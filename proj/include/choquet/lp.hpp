#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "choquet/common.hpp"

namespace choquet {

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Minimize, Maximize };
enum class VarBound { NonNegative, Free };
enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

/// Dense linear program: optimize objective . x subject to rows(i) . x (rel_i) rhs_i,
/// each variable either x >= 0 or free.
template <typename Scalar>
struct LinearProgram {
  VectorX<Scalar> objective;
  Sense sense = Sense::Minimize;
  MatrixX<Scalar> A;
  std::vector<Relation> relations;
  VectorX<Scalar> rhs;
  std::vector<VarBound> bounds;

  LinearProgram() = default;

  explicit LinearProgram(Index num_vars, Sense s = Sense::Minimize)
      : objective(VectorX<Scalar>::Zero(num_vars)), sense(s), A(0, num_vars), rhs(0),
        bounds(static_cast<std::size_t>(num_vars), VarBound::NonNegative) {}

  Index num_vars() const { return objective.size(); }
  Index num_constraints() const { return A.rows(); }

  /// Reserves `count` zero rows; fill them with set_constraint.
  void resize_constraints(Index count) {
    A = MatrixX<Scalar>::Zero(count, num_vars());
    rhs = VectorX<Scalar>::Zero(count);
    relations.assign(static_cast<std::size_t>(count), Relation::Equal);
  }

  void set_constraint(Index i, Relation rel, Scalar b) {
    relations[static_cast<std::size_t>(i)] = rel;
    rhs(i) = b;
  }

  /// Appends one row. Convenient for small programs; large ones use resize_constraints.
  Index add_constraint(const Eigen::Ref<const VectorX<Scalar>>& row, Relation rel, Scalar b) {
    const Index m = A.rows();
    A.conservativeResize(m + 1, num_vars());
    A.row(m) = row.transpose();
    rhs.conservativeResize(m + 1);
    rhs(m) = b;
    relations.push_back(rel);
    return m;
  }

  void validate() const {
    const Index n = objective.size();
    if (A.cols() != n) throw Error(ErrorCode::DimensionMismatch, "constraint rows must have objective length");
    if (rhs.size() != A.rows() || static_cast<Index>(relations.size()) != A.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "constraint count mismatch");
    }
    if (static_cast<Index>(bounds.size()) != n) throw Error(ErrorCode::DimensionMismatch, "bounds must have objective length");
    if (!all_finite(A) || !all_finite(rhs) || !all_finite(objective)) {
      throw Error(ErrorCode::NonFinite, "linear program has non-finite data");
    }
  }
};

using LinearProgramd = LinearProgram<double>;

/// Result of solve().
///
/// `dual` holds one multiplier per constraint with the meaning d(value)/d(rhs_i), so that
/// rhs . dual equals the optimal value. `farkas` (Infeasible only) is a combination z of the
/// rows with z_i >= 0 on >= rows, z_i <= 0 on <= rows, A^T z <= 0 on nonnegative columns,
/// A^T z = 0 on free columns and rhs . z > 0. `ray` (Unbounded only) is an improving direction.
template <typename Scalar>
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Scalar value{0};
  VectorX<Scalar> primal;
  VectorX<Scalar> dual;
  VectorX<Scalar> farkas;
  VectorX<Scalar> ray;
  Index iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

namespace detail {

/// Two-phase dense tableau simplex with Bland's rule.
///
/// Columns: split structural variables, then one slack/surplus per inequality row, then
/// one artificial per row that needs it. Row i of the tableau is the constraint row after
/// scaling by sign_[i] so that its right-hand side is nonnegative. The last row holds
/// reduced costs and the last column the basic values.
template <typename Scalar>
class DenseSimplex {
 public:
  DenseSimplex(const LinearProgram<Scalar>& lp, const SolverConfig& cfg) : lp_(lp), cfg_(cfg) { build(); }

  LpSolution<Scalar> run() {
    LpSolution<Scalar> sol;
    const Scalar feas_tol = Scalar(cfg_.feasibility_tol);

    // Phase one: minimize the sum of artificials.
    VectorX<Scalar> phase1_cost = VectorX<Scalar>::Zero(ncols_);
    for (Index j = first_artificial_; j < ncols_; ++j) phase1_cost(j) = Scalar(1);
    load_costs(phase1_cost);
    iterate(/*allow_artificial=*/true, sol.iterations);

    Scalar infeasibility(0);
    for (Index i = 0; i < m_; ++i) {
      if (is_artificial(basis_[i])) infeasibility += std::max(Scalar(0), T_(i, ncols_));
    }
    if (infeasibility > feas_tol) {
      sol.status = LpStatus::Infeasible;
      sol.farkas = row_multipliers(phase1_cost);
      // Phase-one multipliers certify emptiness; report them in the caller's row orientation.
      return sol;
    }

    drive_out_artificials();

    // Phase two on the original objective (always minimized internally).
    VectorX<Scalar> cost = VectorX<Scalar>::Zero(ncols_);
    const Scalar flip = lp_.sense == Sense::Maximize ? Scalar(-1) : Scalar(1);
    for (Index j = 0; j < n_; ++j) {
      cost(pos_col_[j]) = flip * lp_.objective(j);
      if (neg_col_[j] >= 0) cost(neg_col_[j]) = -flip * lp_.objective(j);
    }
    load_costs(cost);
    const Index entering = iterate(/*allow_artificial=*/false, sol.iterations);
    if (entering >= 0) {
      sol.status = LpStatus::Unbounded;
      sol.ray = unbounded_ray(entering);
      sol.primal = primal();
      return sol;
    }

    sol.status = LpStatus::Optimal;
    sol.primal = primal();
    sol.value = lp_.objective.dot(sol.primal);
    sol.dual = flip * row_multipliers(cost);
    return sol;
  }

 private:
  bool is_artificial(Index col) const { return col >= first_artificial_; }

  void build() {
    lp_.validate();
    m_ = lp_.num_constraints();
    n_ = lp_.num_vars();

    pos_col_.assign(static_cast<std::size_t>(n_), -1);
    neg_col_.assign(static_cast<std::size_t>(n_), -1);
    Index col = 0;
    for (Index j = 0; j < n_; ++j) {
      pos_col_[j] = col++;
      if (lp_.bounds[static_cast<std::size_t>(j)] == VarBound::Free) neg_col_[j] = col++;
    }
    nstruct_ = col;

    sign_.assign(static_cast<std::size_t>(m_), Scalar(1));
    std::vector<Relation> rel(static_cast<std::size_t>(m_));
    Index nslack = 0, nart = 0;
    for (Index i = 0; i < m_; ++i) {
      Relation r = lp_.relations[static_cast<std::size_t>(i)];
      if (lp_.rhs(i) < Scalar(0)) {
        sign_[i] = Scalar(-1);
        if (r == Relation::LessEqual) r = Relation::GreaterEqual;
        else if (r == Relation::GreaterEqual) r = Relation::LessEqual;
      }
      rel[i] = r;
      if (r != Relation::Equal) ++nslack;
      if (r != Relation::LessEqual) ++nart;
    }
    first_artificial_ = nstruct_ + nslack;
    ncols_ = first_artificial_ + nart;

    T_ = RowMatrix::Zero(m_ + 1, ncols_ + 1);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    init_col_.assign(static_cast<std::size_t>(m_), -1);
    Index slack = nstruct_, art = first_artificial_;
    for (Index i = 0; i < m_; ++i) {
      const Scalar s = sign_[i];
      for (Index j = 0; j < n_; ++j) {
        const Scalar a = s * lp_.A(i, j);
        T_(i, pos_col_[j]) = a;
        if (neg_col_[j] >= 0) T_(i, neg_col_[j]) = -a;
      }
      T_(i, ncols_) = s * lp_.rhs(i);
      switch (rel[i]) {
        case Relation::LessEqual:
          T_(i, slack) = Scalar(1);
          basis_[i] = init_col_[i] = slack++;
          break;
        case Relation::GreaterEqual:
          T_(i, slack++) = Scalar(-1);
          T_(i, art) = Scalar(1);
          basis_[i] = init_col_[i] = art++;
          break;
        case Relation::Equal:
          T_(i, art) = Scalar(1);
          basis_[i] = init_col_[i] = art++;
          break;
      }
    }
    max_iter_ = cfg_.max_iterations > 0 ? cfg_.max_iterations : 50 * (m_ + ncols_) + 1000;
  }

  /// Writes reduced costs c - c_B^T B^{-1} A and the negated objective into the last row.
  void load_costs(const VectorX<Scalar>& cost) {
    T_.row(m_).setZero();
    T_.row(m_).head(ncols_) = cost.transpose();
    for (Index i = 0; i < m_; ++i) {
      const Scalar cb = cost(basis_[i]);
      if (cb != Scalar(0)) T_.row(m_) -= cb * T_.row(i);
    }
  }

  void pivot(Index r, Index c) {
    T_.row(r) /= T_(r, c);
    T_(r, c) = Scalar(1);
    for (Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const Scalar f = T_(i, c);
      if (f != Scalar(0)) {
        T_.row(i) -= f * T_.row(r);
        T_(i, c) = Scalar(0);
      }
    }
    basis_[r] = c;
    if (cfg_.verbosity > 0 && cfg_.trace != nullptr) {
      *cfg_.trace << "pivot row " << r << " col " << c << " objective " << -T_(m_, ncols_) << '\n';
      if (cfg_.verbosity > 1) *cfg_.trace << T_ << "\n\n";
    }
  }

  /// Runs simplex iterations until optimal. Returns -1 at optimality, or the entering
  /// column whose ray is unbounded.
  Index iterate(bool allow_artificial, Index& iterations) {
    const Scalar opt_tol = Scalar(cfg_.feasibility_tol);
    const Scalar piv_tol = Scalar(cfg_.pivot_tol);
    const Index limit = allow_artificial ? ncols_ : first_artificial_;
    for (;;) {
      if (iterations >= max_iter_) {
        throw Error(ErrorCode::NumericalBreakdown, "simplex iteration limit reached");
      }
      bool any_candidate = false;
      bool pivoted = false;
      for (Index j = 0; j < limit && !pivoted; ++j) {
        if (!(T_(m_, j) < -opt_tol)) continue;
        any_candidate = true;
        // Ratio test; ties broken by smallest basic column index.
        Index row = -1;
        Scalar best = std::numeric_limits<Scalar>::infinity();
        bool tiny_positive = false;
        for (Index i = 0; i < m_; ++i) {
          const Scalar a = T_(i, j);
          if (a > piv_tol) {
            const Scalar ratio = std::max(Scalar(0), T_(i, ncols_)) / a;
            if (row < 0) {
              row = i;
              best = ratio;
              continue;
            }
            const Scalar slack = Scalar(1e-12) * (Scalar(1) + std::abs(best));
            if (ratio < best - slack) {
              row = i;
              best = ratio;
            } else if (ratio <= best + slack && basis_[i] < basis_[row]) {
              row = i;
              best = std::min(best, ratio);
            }
          } else if (a > Scalar(0) && a > piv_tol * Scalar(1e-3)) {
            tiny_positive = true;
          }
        }
        if (row >= 0) {
          pivot(row, j);
          ++iterations;
          pivoted = true;
        } else if (!tiny_positive) {
          return j;  // no blocking row: the objective decreases without bound along column j
        }
        // Only sub-tolerance pivots: try the next eligible column.
      }
      if (!any_candidate) return -1;
      if (!pivoted) {
        throw Error(ErrorCode::NumericalBreakdown, "every improving column has pivots below tolerance");
      }
    }
  }

  /// Pivots zero-level artificials out of the basis on the largest structural or slack entry
  /// of their row. The level is set to exactly zero first, so the pivot is degenerate.
  void drive_out_artificials() {
    const Scalar piv_tol = Scalar(cfg_.pivot_tol);
    for (Index i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      Index best = -1;
      for (Index j = 0; j < first_artificial_; ++j) {
        if (std::abs(T_(i, j)) > piv_tol && (best < 0 || std::abs(T_(i, j)) > std::abs(T_(i, best)))) best = j;
      }
      if (best < 0) continue;  // redundant row: its artificial stays basic at level zero
      T_(i, ncols_) = Scalar(0);
      pivot(i, best);
    }
  }

  VectorX<Scalar> column_values() const {
    VectorX<Scalar> x = VectorX<Scalar>::Zero(ncols_);
    for (Index i = 0; i < m_; ++i) x(basis_[i]) = T_(i, ncols_);
    return x;
  }

  VectorX<Scalar> primal() const {
    const VectorX<Scalar> x = column_values();
    VectorX<Scalar> out(n_);
    for (Index j = 0; j < n_; ++j) {
      out(j) = x(pos_col_[j]);
      if (neg_col_[j] >= 0) out(j) -= x(neg_col_[j]);
    }
    return out;
  }

  /// y = c_B^T B^{-1}, read off the reduced costs of each row's initial basic column,
  /// mapped back to the caller's row orientation.
  VectorX<Scalar> row_multipliers(const VectorX<Scalar>& cost) const {
    VectorX<Scalar> y(m_);
    for (Index i = 0; i < m_; ++i) {
      const Index c = init_col_[i];
      y(i) = sign_[i] * (cost(c) - T_(m_, c));
    }
    return y;
  }

  VectorX<Scalar> unbounded_ray(Index entering) const {
    VectorX<Scalar> d = VectorX<Scalar>::Zero(ncols_);
    d(entering) = Scalar(1);
    for (Index i = 0; i < m_; ++i) d(basis_[i]) = -T_(i, entering);
    VectorX<Scalar> out(n_);
    for (Index j = 0; j < n_; ++j) {
      out(j) = d(pos_col_[j]);
      if (neg_col_[j] >= 0) out(j) -= d(neg_col_[j]);
    }
    return out;
  }

  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  const LinearProgram<Scalar>& lp_;
  SolverConfig cfg_;
  Index m_ = 0, n_ = 0, nstruct_ = 0, first_artificial_ = 0, ncols_ = 0, max_iter_ = 0;
  std::vector<Index> pos_col_, neg_col_;
  std::vector<Scalar> sign_;
  std::vector<Index> basis_, init_col_;
  RowMatrix T_;
};

}  // namespace detail

/// Solves a dense LP with the two-phase simplex method (Bland's rule).
/// Throws NumericalBreakdown when no admissible pivot above the pivot tolerance exists.
template <typename Scalar>
LpSolution<Scalar> solve(const LinearProgram<Scalar>& lp, const SolverConfig& cfg = {}) {
  return detail::DenseSimplex<Scalar>(lp, cfg).run();
}

template <typename Scalar>
struct FeasibilityResult {
  bool feasible = false;
  VectorX<Scalar> point;        // feasible point when feasible
  VectorX<Scalar> certificate;  // Farkas multipliers when infeasible (see LpSolution)
};

/// Phase-one feasibility of {A x (rel) b, bounds}.
template <typename Scalar>
FeasibilityResult<Scalar> check_feasibility(const MatrixX<Scalar>& A, const std::vector<Relation>& relations,
                                            const VectorX<Scalar>& rhs, const std::vector<VarBound>& bounds,
                                            const SolverConfig& cfg = {}) {
  LinearProgram<Scalar> lp(A.cols());
  lp.A = A;
  lp.relations = relations;
  lp.rhs = rhs;
  lp.bounds = bounds;
  const auto sol = solve(lp, cfg);
  FeasibilityResult<Scalar> out;
  out.feasible = sol.status != LpStatus::Infeasible;
  if (out.feasible) out.point = sol.primal;
  else out.certificate = sol.farkas;
  return out;
}

/// Residuals of an LP solution against its program; used by tests and reports.
template <typename Scalar>
struct LpResiduals {
  Scalar primal{0};         // worst constraint or bound violation
  Scalar dual{0};           // worst reduced-cost sign violation
  Scalar gap{0};            // |objective . x - rhs . y|
  Scalar complementarity{0};  // worst |slack_i * y_i| and |x_j * reduced_cost_j|
};

template <typename Scalar>
LpResiduals<Scalar> residuals(const LinearProgram<Scalar>& lp, const LpSolution<Scalar>& sol) {
  LpResiduals<Scalar> r;
  const VectorX<Scalar>& x = sol.primal;
  const VectorX<Scalar>& y = sol.dual;
  const VectorX<Scalar> ax = lp.A * x;
  // Work with the minimization form: multipliers of the min problem are -y for a max problem.
  const Scalar flip = lp.sense == Sense::Maximize ? Scalar(-1) : Scalar(1);
  const VectorX<Scalar> ymin = flip * y;
  for (Index i = 0; i < lp.num_constraints(); ++i) {
    const Scalar slack = ax(i) - lp.rhs(i);
    Scalar viol(0);
    switch (lp.relations[static_cast<std::size_t>(i)]) {
      case Relation::LessEqual:
        viol = std::max(Scalar(0), slack);
        r.dual = std::max(r.dual, std::max(Scalar(0), ymin(i)));
        break;
      case Relation::GreaterEqual:
        viol = std::max(Scalar(0), -slack);
        r.dual = std::max(r.dual, std::max(Scalar(0), -ymin(i)));
        break;
      case Relation::Equal:
        viol = std::abs(slack);
        break;
    }
    r.primal = std::max(r.primal, viol);
    if (lp.relations[static_cast<std::size_t>(i)] != Relation::Equal) {
      r.complementarity = std::max(r.complementarity, std::abs(slack * ymin(i)));
    }
  }
  const VectorX<Scalar> reduced = flip * lp.objective - lp.A.transpose() * ymin;
  for (Index j = 0; j < lp.num_vars(); ++j) {
    if (lp.bounds[static_cast<std::size_t>(j)] == VarBound::NonNegative) {
      r.primal = std::max(r.primal, std::max(Scalar(0), -x(j)));
      r.dual = std::max(r.dual, std::max(Scalar(0), -reduced(j)));
      r.complementarity = std::max(r.complementarity, std::abs(x(j) * reduced(j)));
    } else {
      r.dual = std::max(r.dual, std::abs(reduced(j)));
    }
  }
  r.gap = std::abs(lp.objective.dot(x) - lp.rhs.dot(y));
  return r;
}

}  // namespace choquet
