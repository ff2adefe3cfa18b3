#pragma once

#include <limits>
#include <string>
#include <utility>

#include "choquet/convex_order.hpp"
#include "choquet/cost.hpp"
#include "choquet/lp.hpp"
#include "choquet/measures.hpp"
#include "choquet/ot.hpp"

namespace choquet {

/// Dual variables u on supp mu, v on supp nu and gamma (dim x |supp mu|), feasible when
/// u(x) - v(y) + <gamma(x), y - x> <= c(x, y).
template <typename Scalar>
struct GammaDual {
  SampledFunction<Scalar> u;
  SampledFunction<Scalar> v;
  MatrixX<Scalar> gamma;
};

template <typename Scalar>
struct GammaDualResult {
  GammaDual<Scalar> dual;
  Scalar value;
};

/// Single potential f on supp mu U supp nu with gamma on the same points.
template <typename Scalar>
struct SymmetricDual {
  SampledFunction<Scalar> f;
  MatrixX<Scalar> gamma;
};

template <typename Scalar>
struct SymmetricDualResult {
  SymmetricDual<Scalar> dual;
  Scalar value;
};

/// Minimizes int c dpi over martingale couplings of (mu, nu).
template <typename Scalar, PairCost<Scalar> Cost>
TransportPlan<Scalar> mot_primal(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu, const Cost& cost,
                                 const SolverConfig& cfg = {}) {
  auto lp = detail::martingale_program(mu, nu);
  const MatrixX<Scalar> C = cost_matrix<Scalar>(cost, mu.points(), nu.points());
  for (Index i = 0; i < mu.size(); ++i) {
    for (Index j = 0; j < nu.size(); ++j) lp.objective(i * nu.size() + j) = C(i, j);
  }
  const auto sol = solve(lp, cfg);
  if (sol.status == LpStatus::Infeasible) throw Error(ErrorCode::NotInConvexOrder, "no martingale coupling exists");
  detail::require_optimal(sol.status, "martingale transport program");
  Coupling<Scalar> pi(mu, nu, detail::unflatten(sol.primal, mu.size(), nu.size()));
  const Scalar value = coupling_cost(pi, C);
  return {std::move(pi), value};
}

/// Maximizes int u dmu - int v dnu over u(x) - v(y) + <gamma(x), y - x> <= c(x, y).
template <typename Scalar, PairCost<Scalar> Cost>
GammaDualResult<Scalar> mot_dual(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu, const Cost& cost,
                                 const SolverConfig& cfg = {}) {
  detail::require_same_dim(mu, nu);
  const Index m = mu.size(), n = nu.size(), d = mu.dim();
  const MatrixX<Scalar> C = cost_matrix<Scalar>(cost, mu.points(), nu.points());
  LinearProgram<Scalar> lp(m + n + m * d, Sense::Maximize);
  lp.bounds.assign(static_cast<std::size_t>(lp.num_vars()), VarBound::Free);
  lp.objective.head(m) = mu.weights();
  lp.objective.segment(m, n) = -nu.weights();
  lp.resize_constraints(m * n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index r = i * n + j;
      lp.A(r, i) = Scalar(1);
      lp.A(r, m + j) = Scalar(-1);
      for (Index k = 0; k < d; ++k) lp.A(r, m + n + i * d + k) = nu.point(j)(k) - mu.point(i)(k);
      lp.set_constraint(r, Relation::LessEqual, C(i, j));
    }
  }
  const auto sol = solve(lp, cfg);
  if (sol.status == LpStatus::Unbounded) throw Error(ErrorCode::NotInConvexOrder, "martingale dual is unbounded");
  detail::require_optimal(sol.status, "martingale dual program");
  MatrixX<Scalar> gamma(d, m);
  for (Index i = 0; i < m; ++i) gamma.col(i) = sol.primal.segment(m + n + i * d, d);
  GammaDual<Scalar> dual{SampledFunction<Scalar>(mu.points(), sol.primal.head(m)),
                         SampledFunction<Scalar>(nu.points(), sol.primal.segment(m, n)), std::move(gamma)};
  return {std::move(dual), sol.value};
}

/// Largest u(x) - v(y) + <gamma(x), y - x> - c(x, y) over the supports of u and v.
template <typename Scalar, PairCost<Scalar> Cost>
Scalar mot_dual_violation(const GammaDual<Scalar>& g, const Cost& cost) {
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < g.u.size(); ++i) {
    for (Index j = 0; j < g.v.size(); ++j) {
      const auto x = g.u.point(i);
      const auto y = g.v.point(j);
      worst = std::max(worst, g.u.value(i) - g.v.value(j) + g.gamma.col(i).dot(y - x) - static_cast<Scalar>(cost(x, y)));
    }
  }
  return worst;
}

/// The u = v restriction of the martingale dual over the union U of both supports:
/// maximizes int f d(mu - nu) subject to f(x) - f(y) + <gamma(x), y - x> <= c(x, y) for x != y in U.
/// Requires c to vanish on the diagonal of U (NonVanishingDiagonal otherwise).
template <typename Scalar, PairCost<Scalar> Cost>
SymmetricDualResult<Scalar> mot_dual_symmetric(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu,
                                               const Cost& cost, const SolverConfig& cfg = {}) {
  detail::require_same_dim(mu, nu);
  const MatrixX<Scalar> U = support_union(mu.points(), nu.points());
  const MatrixX<Scalar> C = cost_matrix<Scalar>(cost, U, U);
  const Index u = U.cols(), d = U.rows();
  for (Index a = 0; a < u; ++a) {
    if (std::abs(C(a, a)) > Scalar(1e-12)) {
      throw Error(ErrorCode::NonVanishingDiagonal, "c(x, x) = " + std::to_string(static_cast<double>(C(a, a))) +
                                                       " at " + describe_point<Scalar>(U.col(a)));
    }
  }
  LinearProgram<Scalar> lp(u + u * d, Sense::Maximize);
  lp.bounds.assign(static_cast<std::size_t>(lp.num_vars()), VarBound::Free);
  lp.objective.head(u) = weights_on(mu, U) - weights_on(nu, U);
  lp.resize_constraints(u * (u - 1));
  Index r = 0;
  for (Index a = 0; a < u; ++a) {
    for (Index b = 0; b < u; ++b) {
      if (a == b) continue;
      lp.A(r, a) = Scalar(1);
      lp.A(r, b) = Scalar(-1);
      for (Index k = 0; k < d; ++k) lp.A(r, u + a * d + k) = U(k, b) - U(k, a);
      lp.set_constraint(r++, Relation::LessEqual, C(a, b));
    }
  }
  const auto sol = solve(lp, cfg);
  if (sol.status == LpStatus::Unbounded) throw Error(ErrorCode::NotInConvexOrder, "symmetric martingale dual is unbounded");
  detail::require_optimal(sol.status, "symmetric martingale dual program");
  MatrixX<Scalar> gamma(d, u);
  for (Index a = 0; a < u; ++a) gamma.col(a) = sol.primal.segment(u + a * d, d);
  return {SymmetricDual<Scalar>{SampledFunction<Scalar>(U, sol.primal.head(u)), std::move(gamma)}, sol.value};
}

/// Largest f(x) - f(y) + <gamma(x), y - x> - c(x, y) over pairs of the potential's support.
template <typename Scalar, PairCost<Scalar> Cost>
Scalar symmetric_dual_violation(const SymmetricDual<Scalar>& s, const Cost& cost) {
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index a = 0; a < s.f.size(); ++a) {
    for (Index b = 0; b < s.f.size(); ++b) {
      const auto x = s.f.point(a);
      const auto y = s.f.point(b);
      worst = std::max(worst, s.f.value(a) - s.f.value(b) + s.gamma.col(a).dot(y - x) - static_cast<Scalar>(cost(x, y)));
    }
  }
  return worst;
}

}  // namespace choquet
