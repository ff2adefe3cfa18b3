#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "choquet/cost.hpp"
#include "choquet/lp.hpp"
#include "choquet/measures.hpp"

namespace choquet {

template <typename Scalar>
struct TransportPlan {
  Coupling<Scalar> coupling;
  Scalar value;
};

/// Kantorovich potentials: phi on the left support, psi on the right support,
/// feasible when phi(x) - psi(y) <= c(x, y).
template <typename Scalar>
struct Potentials {
  SampledFunction<Scalar> phi;
  SampledFunction<Scalar> psi;
};

template <typename Scalar>
struct DualResult {
  Potentials<Scalar> potentials;
  Scalar value;
};

namespace detail {

inline void require_optimal(LpStatus status, const char* what) {
  if (status != LpStatus::Optimal) {
    throw Error(ErrorCode::NumericalBreakdown, std::string(what) + ": solver returned " + to_string(status));
  }
}

template <typename Scalar>
void require_same_dim(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu) {
  if (mu.dim() != nu.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "measures live in dimensions " + std::to_string(mu.dim()) + " and " +
                                                  std::to_string(nu.dim()));
  }
}

/// Transport polytope rows: pi flattened row-major (i * n + j); m row-sum rows then n column-sum rows.
template <typename Scalar>
LinearProgram<Scalar> transport_program(const VectorX<Scalar>& a, const VectorX<Scalar>& b, const MatrixX<Scalar>& C) {
  const Index m = a.size(), n = b.size();
  LinearProgram<Scalar> lp(m * n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) lp.objective(i * n + j) = C(i, j);
  }
  lp.resize_constraints(m + n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      lp.A(i, i * n + j) = Scalar(1);
      lp.A(m + j, i * n + j) = Scalar(1);
    }
    lp.set_constraint(i, Relation::Equal, a(i));
  }
  for (Index j = 0; j < n; ++j) lp.set_constraint(m + j, Relation::Equal, b(j));
  return lp;
}

template <typename Scalar>
MatrixX<Scalar> unflatten(const VectorX<Scalar>& x, Index m, Index n) {
  MatrixX<Scalar> out(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) out(i, j) = x(i * n + j);
  }
  return out;
}

}  // namespace detail

/// Minimizes sum pi(x, y) c(x, y) over couplings of (mu, nu).
template <typename Scalar, PairCost<Scalar> Cost>
TransportPlan<Scalar> kantorovich_primal(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu,
                                         const Cost& cost, const SolverConfig& cfg = {}) {
  detail::require_same_dim(mu, nu);
  const MatrixX<Scalar> C = cost_matrix<Scalar>(cost, mu.points(), nu.points());
  const auto sol = solve(detail::transport_program(mu.weights(), nu.weights(), C), cfg);
  detail::require_optimal(sol.status, "transport program");
  Coupling<Scalar> pi(mu, nu, detail::unflatten(sol.primal, mu.size(), nu.size()));
  const Scalar value = coupling_cost(pi, C);
  return {std::move(pi), value};
}

/// Maximizes int phi dmu - int psi dnu subject to phi(x) - psi(y) <= c(x, y) on the supports.
template <typename Scalar, PairCost<Scalar> Cost>
DualResult<Scalar> kantorovich_dual(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu,
                                    const Cost& cost, const SolverConfig& cfg = {}) {
  detail::require_same_dim(mu, nu);
  const MatrixX<Scalar> C = cost_matrix<Scalar>(cost, mu.points(), nu.points());
  const Index m = mu.size(), n = nu.size();
  LinearProgram<Scalar> lp(m + n, Sense::Maximize);
  lp.bounds.assign(static_cast<std::size_t>(m + n), VarBound::Free);
  lp.objective.head(m) = mu.weights();
  lp.objective.tail(n) = -nu.weights();
  lp.resize_constraints(m * n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index r = i * n + j;
      lp.A(r, i) = Scalar(1);
      lp.A(r, m + j) = Scalar(-1);
      lp.set_constraint(r, Relation::LessEqual, C(i, j));
    }
  }
  const auto sol = solve(lp, cfg);
  detail::require_optimal(sol.status, "dual transport program");
  Potentials<Scalar> pots{SampledFunction<Scalar>(mu.points(), sol.primal.head(m)),
                          SampledFunction<Scalar>(nu.points(), sol.primal.tail(n))};
  return {std::move(pots), sol.value};
}

/// int phi dmu - int psi dnu.
template <typename Scalar>
Scalar dual_objective(const Potentials<Scalar>& p, const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu) {
  return integrate(p.phi, mu) - integrate(p.psi, nu);
}

/// Largest phi(x) - psi(y) - c(x, y) over the product of the potentials' supports.
template <typename Scalar, PairCost<Scalar> Cost>
Scalar dual_violation(const Potentials<Scalar>& p, const Cost& cost) {
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < p.phi.size(); ++i) {
    for (Index j = 0; j < p.psi.size(); ++j) {
      worst = std::max(worst, p.phi.value(i) - p.psi.value(j) - static_cast<Scalar>(cost(p.phi.point(i), p.psi.point(j))));
    }
  }
  return worst;
}

/// Double c-transform of psi: phi'(x) = min_y c(x, y) + psi(y), then psi'(y) = max_x phi'(x) - c(x, y).
/// psi must be defined on every point of `right`.
template <typename Scalar, PairCost<Scalar> Cost>
Potentials<Scalar> c_transform(const SampledFunction<Scalar>& psi, const Cost& cost, const MatrixX<Scalar>& left,
                               const MatrixX<Scalar>& right) {
  const MatrixX<Scalar> C = cost_matrix<Scalar>(cost, left, right);
  VectorX<Scalar> psi_v(right.cols());
  for (Index j = 0; j < right.cols(); ++j) psi_v(j) = psi.at(right.col(j));
  const VectorX<Scalar> phi_new = (C.rowwise() + psi_v.transpose()).rowwise().minCoeff();
  const VectorX<Scalar> psi_new = ((-C).colwise() + phi_new).colwise().maxCoeff().transpose();
  return {SampledFunction<Scalar>(left, phi_new), SampledFunction<Scalar>(right, psi_new)};
}

struct TightPair {
  Index left;
  Index right;
};

/// Pairs where the dual constraint is active, and whether the coupling lives on them.
template <typename Scalar>
struct TightReport {
  std::vector<TightPair> pairs;  // indices into the coupling supports
  Scalar untight_mass{0};        // coupling mass on pairs outside the tight set
  bool ok = false;               // untight_mass <= tol * total mass
};

/// Tight set {(x, y) : phi(x) - psi(y) >= c(x, y) - tol} over the coupling supports.
template <typename Scalar, PairCost<Scalar> Cost>
TightReport<Scalar> tight_support_report(const Potentials<Scalar>& p, const Coupling<Scalar>& pi, const Cost& cost,
                                         Scalar tol) {
  TightReport<Scalar> rep;
  const auto& L = pi.left();
  const auto& R = pi.right();
  for (Index i = 0; i < L.size(); ++i) {
    const Scalar phi = p.phi.at(L.point(i));
    for (Index j = 0; j < R.size(); ++j) {
      const Scalar gap = phi - p.psi.at(R.point(j)) - static_cast<Scalar>(cost(L.point(i), R.point(j)));
      if (gap >= -tol) rep.pairs.push_back({i, j});
      else rep.untight_mass += pi.mass()(i, j);
    }
  }
  rep.ok = rep.untight_mass <= tol * pi.mass().sum();
  return rep;
}

/// Single potential of the Kantorovich-Rubinstein dual, on the union of both supports.
template <typename Scalar>
struct KrResult {
  SampledFunction<Scalar> f;
  Scalar value;
};

/// Union of two supports: the left points in order, then right points not already present.
template <typename Scalar>
MatrixX<Scalar> support_union(const MatrixX<Scalar>& a, const MatrixX<Scalar>& b) {
  PointIndex<Scalar> idx(a);
  MatrixX<Scalar> out = a;
  for (Index j = 0; j < b.cols(); ++j) {
    if (idx.find(b.col(j))) continue;
    idx.insert(b.col(j), out.cols());
    out.conservativeResize(a.rows(), out.cols() + 1);
    out.col(out.cols() - 1) = b.col(j);
  }
  return out;
}

/// Weights of a measure spread onto a larger point set that contains its support.
template <typename Scalar>
VectorX<Scalar> weights_on(const DiscreteMeasure<Scalar>& m, const MatrixX<Scalar>& points) {
  VectorX<Scalar> w = VectorX<Scalar>::Zero(points.cols());
  PointIndex<Scalar> idx(points);
  for (Index i = 0; i < m.size(); ++i) {
    auto j = idx.find(m.point(i));
    if (!j) throw Error(ErrorCode::MissingValue, "support point missing from the target point set");
    w(*j) += m.weight(i);
  }
  return w;
}

template <typename Scalar>
std::string describe_point(const PointRef<Scalar>& p) {
  std::string s = "(";
  for (Index i = 0; i < p.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(static_cast<double>(p(i)));
  }
  return s + ")";
}

/// Maximizes int f d(mu - nu) over 1-Lipschitz f with respect to a metric cost.
/// Raises NotAMetric naming the first violating triple of support points.
template <typename Scalar, PairCost<Scalar> Cost>
KrResult<Scalar> kr_dual(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu, const Cost& metric,
                         const SolverConfig& cfg = {}) {
  detail::require_same_dim(mu, nu);
  const MatrixX<Scalar> U = support_union(mu.points(), nu.points());
  const MatrixX<Scalar> D = cost_matrix<Scalar>(metric, U, U);
  if (auto v = find_metric_violation<Scalar>(D, Scalar(cfg.feasibility_tol))) {
    throw Error(ErrorCode::NotAMetric, v->clause + " at points " + describe_point<Scalar>(U.col(v->a)) + ", " +
                                           describe_point<Scalar>(U.col(v->b)) + ", " +
                                           describe_point<Scalar>(U.col(v->c)));
  }
  const Index u = U.cols();
  LinearProgram<Scalar> lp(u, Sense::Maximize);
  lp.bounds.assign(static_cast<std::size_t>(u), VarBound::Free);
  lp.objective = weights_on(mu, U) - weights_on(nu, U);
  lp.resize_constraints(u * (u - 1));
  Index r = 0;
  for (Index a = 0; a < u; ++a) {
    for (Index b = 0; b < u; ++b) {
      if (a == b) continue;
      lp.A(r, a) = Scalar(1);
      lp.A(r, b) = Scalar(-1);
      lp.set_constraint(r++, Relation::LessEqual, D(a, b));
    }
  }
  const auto sol = solve(lp, cfg);
  detail::require_optimal(sol.status, "Kantorovich-Rubinstein program");
  return {SampledFunction<Scalar>(U, sol.primal), sol.value};
}

/// True iff the coupling mass sitting on pairs with |f(x) - f(y) - d(x, y)| > tol is at most tol.
template <typename Scalar, PairCost<Scalar> Cost>
bool kr_tight_check(const SampledFunction<Scalar>& f, const Coupling<Scalar>& pi, const Cost& metric, Scalar tol) {
  Scalar loose(0);
  for (Index i = 0; i < pi.left().size(); ++i) {
    const Scalar fx = f.at(pi.left().point(i));
    for (Index j = 0; j < pi.right().size(); ++j) {
      const Scalar d = static_cast<Scalar>(metric(pi.left().point(i), pi.right().point(j)));
      if (std::abs(fx - f.at(pi.right().point(j)) - d) > tol) loose += pi.mass()(i, j);
    }
  }
  return loose <= tol * pi.mass().sum();
}

}  // namespace choquet
