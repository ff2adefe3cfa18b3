#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "choquet/cost.hpp"
#include "choquet/lp.hpp"
#include "choquet/measures.hpp"
#include "choquet/ot.hpp"

namespace choquet {

/// Largest dense product support accepted by the multimarginal solvers.
inline constexpr Index kMaxProductSize = 1000000;

/// One potential per marginal; feasible when sum_i f_i(x_i) <= c(x_1, ..., x_k) on the product.
template <typename Scalar>
struct MultiPotentials {
  std::vector<SampledFunction<Scalar>> f;
};

template <typename Scalar>
struct MultiPlan {
  MultiCoupling<Scalar> coupling;
  Scalar value;
};

template <typename Scalar>
struct MultiDualResult {
  MultiPotentials<Scalar> potentials;
  Scalar value;
};

namespace detail {

inline Index product_size(const std::vector<Index>& shape) {
  Index n = 1;
  for (Index s : shape) {
    if (s <= 0) throw Error(ErrorCode::InvalidInput, "empty support in a product");
    if (n > kMaxProductSize / s) {
      throw Error(ErrorCode::ProductTooLarge, "product support exceeds " + std::to_string(kMaxProductSize) + " entries");
    }
    n *= s;
  }
  return n;
}

template <typename Scalar>
std::vector<MatrixX<Scalar>> support_points(const std::vector<DiscreteMeasure<Scalar>>& ms) {
  if (ms.size() < 2) throw Error(ErrorCode::InvalidInput, "at least two marginals are required");
  std::vector<MatrixX<Scalar>> out;
  for (const auto& m : ms) {
    if (m.dim() != ms.front().dim()) throw Error(ErrorCode::DimensionMismatch, "marginals differ in dimension");
    out.push_back(m.points());
  }
  return out;
}

inline std::vector<Index> shape_of(const auto& supports) {
  std::vector<Index> shape;
  for (const auto& s : supports) shape.push_back(s.cols());
  return shape;
}

inline std::vector<Index> strides_of(const std::vector<Index>& shape) {
  std::vector<Index> st(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) st[a - 1] = st[a] * shape[a];
  return st;
}

}  // namespace detail

/// Minimizes sum mass * c over couplings with the given marginals.
template <typename Scalar>
MultiPlan<Scalar> multimarginal_primal(const std::vector<DiscreteMeasure<Scalar>>& ms, const MultiCost<Scalar>& cost,
                                       const SolverConfig& cfg = {}) {
  const auto supports = detail::support_points(ms);
  const auto shape = detail::shape_of(supports);
  const Index N = detail::product_size(shape);
  const VectorX<Scalar> C = cost.evaluate(supports);
  const auto strides = detail::strides_of(shape);

  Index rows = 0;
  std::vector<Index> offset;
  for (Index s : shape) {
    offset.push_back(rows);
    rows += s;
  }
  LinearProgram<Scalar> lp(N);
  lp.objective = C;
  lp.resize_constraints(rows);
  for (Index flat = 0; flat < N; ++flat) {
    for (std::size_t a = 0; a < shape.size(); ++a) lp.A(offset[a] + (flat / strides[a]) % shape[a], flat) = Scalar(1);
  }
  for (std::size_t a = 0; a < ms.size(); ++a) {
    for (Index i = 0; i < shape[a]; ++i) lp.set_constraint(offset[a] + i, Relation::Equal, ms[a].weight(i));
  }
  const auto sol = solve(lp, cfg);
  detail::require_optimal(sol.status, "multimarginal program");
  MultiCoupling<Scalar> pi(ms, sol.primal);
  const Scalar value = pi.mass().dot(C);
  return {std::move(pi), value};
}

/// Maximizes sum_i int f_i dmu_i subject to sum_i f_i(x_i) <= c on the product support.
template <typename Scalar>
MultiDualResult<Scalar> multimarginal_dual(const std::vector<DiscreteMeasure<Scalar>>& ms,
                                           const MultiCost<Scalar>& cost, const SolverConfig& cfg = {}) {
  const auto supports = detail::support_points(ms);
  const auto shape = detail::shape_of(supports);
  const Index N = detail::product_size(shape);
  const VectorX<Scalar> C = cost.evaluate(supports);
  const auto strides = detail::strides_of(shape);

  Index vars = 0;
  std::vector<Index> offset;
  for (Index s : shape) {
    offset.push_back(vars);
    vars += s;
  }
  LinearProgram<Scalar> lp(vars, Sense::Maximize);
  lp.bounds.assign(static_cast<std::size_t>(vars), VarBound::Free);
  for (std::size_t a = 0; a < ms.size(); ++a) lp.objective.segment(offset[a], shape[a]) = ms[a].weights();
  lp.resize_constraints(N);
  for (Index flat = 0; flat < N; ++flat) {
    for (std::size_t a = 0; a < shape.size(); ++a) lp.A(flat, offset[a] + (flat / strides[a]) % shape[a]) = Scalar(1);
    lp.set_constraint(flat, Relation::LessEqual, C(flat));
  }
  const auto sol = solve(lp, cfg);
  detail::require_optimal(sol.status, "multimarginal dual program");
  MultiPotentials<Scalar> pots;
  for (std::size_t a = 0; a < ms.size(); ++a) {
    pots.f.emplace_back(supports[a], sol.primal.segment(offset[a], shape[a]));
  }
  return {std::move(pots), sol.value};
}

/// sum_i int f_i dmu_i.
template <typename Scalar>
Scalar multi_dual_objective(const MultiPotentials<Scalar>& p, const std::vector<DiscreteMeasure<Scalar>>& ms) {
  Scalar total(0);
  for (std::size_t a = 0; a < ms.size(); ++a) total += integrate(p.f[a], ms[a]);
  return total;
}

/// Potentials on full supports as index-aligned vectors, with the flattened cost on the product.
template <typename Scalar>
struct ProductTable {
  std::vector<MatrixX<Scalar>> supports;
  std::vector<Index> shape;
  std::vector<Index> strides;
  VectorX<Scalar> cost;

  ProductTable(std::vector<MatrixX<Scalar>> s, const MultiCost<Scalar>& c) : supports(std::move(s)) {
    shape = detail::shape_of(supports);
    detail::product_size(shape);
    strides = detail::strides_of(shape);
    cost = c.evaluate(supports);
  }

  Index size() const { return cost.size(); }
  Index coord(Index flat, std::size_t axis) const { return (flat / strides[axis]) % shape[axis]; }
};

namespace detail {

/// Values of each potential aligned with the table supports; throws MissingValue on gaps.
template <typename Scalar>
std::vector<VectorX<Scalar>> aligned_values(const MultiPotentials<Scalar>& p, const ProductTable<Scalar>& t) {
  if (p.f.size() != t.supports.size()) throw Error(ErrorCode::DimensionMismatch, "one potential per marginal expected");
  std::vector<VectorX<Scalar>> out;
  for (std::size_t a = 0; a < t.supports.size(); ++a) {
    VectorX<Scalar> v(t.shape[a]);
    for (Index i = 0; i < t.shape[a]; ++i) v(i) = p.f[a].at(t.supports[a].col(i));
    out.push_back(std::move(v));
  }
  return out;
}

/// inf over the product of c - sum_{j != axis} f_j, restricted to tuples whose coordinates are allowed.
template <typename Scalar>
VectorX<Scalar> axis_infimum(const ProductTable<Scalar>& t, const std::vector<VectorX<Scalar>>& f, std::size_t axis,
                             const std::vector<std::vector<char>>* allowed = nullptr) {
  VectorX<Scalar> out = VectorX<Scalar>::Constant(t.shape[axis], std::numeric_limits<Scalar>::infinity());
  const std::size_t k = t.shape.size();
  for (Index flat = 0; flat < t.size(); ++flat) {
    Scalar v = t.cost(flat);
    bool ok = true;
    for (std::size_t a = 0; a < k && ok; ++a) {
      if (a == axis) continue;
      const Index c = t.coord(flat, a);
      if (allowed && !(*allowed)[a][static_cast<std::size_t>(c)]) ok = false;
      v -= f[a](c);
    }
    if (!ok) continue;
    Scalar& slot = out(t.coord(flat, axis));
    slot = std::min(slot, v);
  }
  return out;
}

template <typename Scalar>
Scalar fixed_point_residual(const ProductTable<Scalar>& t, const std::vector<VectorX<Scalar>>& f) {
  Scalar r(0);
  for (std::size_t a = 0; a < f.size(); ++a) r = std::max(r, (axis_infimum(t, f, a) - f[a]).cwiseAbs().maxCoeff());
  return r;
}

}  // namespace detail

template <typename Scalar>
struct ConvexifyResult {
  MultiPotentials<Scalar> potentials;
  Scalar residual{0};  // max_i |f_i - inf{c - sum_{j != i} f_j}|
  int sweeps = 0;
};

/// c-convexification of potentials given on subsets A_i of the supports.
///
/// `partial[i]` is defined on A_i (each point must belong to supports[i]). Raises InfeasibleInput
/// when sum_i f_i(a_i) > c(a) + tol for some a in the product of the A_i. The first sweep computes
/// f~_i(x_i) = inf{c - sum_{j<i} f~_j - sum_{j>i} f_j} with x_j ranging over A_j for j > i; later
/// sweeps repeat the infima over the full supports until the fixed-point residual is <= 1e-9 or
/// 100 sweeps have run.
template <typename Scalar>
ConvexifyResult<Scalar> multi_c_convexify(const std::vector<SampledFunction<Scalar>>& partial,
                                          const MultiCost<Scalar>& cost, const std::vector<MatrixX<Scalar>>& supports,
                                          const SolverConfig& cfg = {}) {
  const ProductTable<Scalar> t(supports, cost);
  const std::size_t k = supports.size();
  if (k < 2 || partial.size() != k) throw Error(ErrorCode::InvalidInput, "one partial potential per marginal expected");

  std::vector<VectorX<Scalar>> f(k);
  std::vector<std::vector<char>> in_a(k);
  for (std::size_t a = 0; a < k; ++a) {
    if (partial[a].size() == 0) throw Error(ErrorCode::InvalidInput, "partial potential " + std::to_string(a) + " is empty");
    f[a] = VectorX<Scalar>::Zero(t.shape[a]);
    in_a[a].assign(static_cast<std::size_t>(t.shape[a]), 0);
    PointIndex<Scalar> idx(supports[a]);
    for (Index i = 0; i < partial[a].size(); ++i) {
      auto j = idx.find(partial[a].point(i));
      if (!j) throw Error(ErrorCode::InvalidInput, "partial potential " + std::to_string(a) + " leaves the support");
      f[a](*j) = partial[a].value(i);
      in_a[a][static_cast<std::size_t>(*j)] = 1;
    }
  }

  // Feasibility on the product of the A_i.
  const Scalar tol = Scalar(cfg.feasibility_tol);
  for (Index flat = 0; flat < t.size(); ++flat) {
    Scalar s(0);
    bool inside = true;
    for (std::size_t a = 0; a < k && inside; ++a) {
      const Index c = t.coord(flat, a);
      inside = in_a[a][static_cast<std::size_t>(c)];
      s += f[a](c);
    }
    if (inside && s > t.cost(flat) + tol) {
      throw Error(ErrorCode::InfeasibleInput, "partial potentials exceed the cost by " +
                                                  std::to_string(static_cast<double>(s - t.cost(flat))));
    }
  }

  // Inductive pass: axes after the current one are still restricted to A_j.
  std::vector<std::vector<char>> allowed = in_a;
  for (std::size_t a = 0; a < k; ++a) {
    f[a] = detail::axis_infimum(t, f, a, &allowed);
    allowed[a].assign(static_cast<std::size_t>(t.shape[a]), 1);
  }

  ConvexifyResult<Scalar> out;
  out.sweeps = 1;
  out.residual = detail::fixed_point_residual(t, f);
  while (out.residual > Scalar(1e-9) && out.sweeps < 100) {
    for (std::size_t a = 0; a < k; ++a) f[a] = detail::axis_infimum(t, f, a);
    ++out.sweeps;
    out.residual = detail::fixed_point_residual(t, f);
  }
  for (std::size_t a = 0; a < k; ++a) out.potentials.f.emplace_back(supports[a], f[a]);
  return out;
}

/// Convexification seeded at one product point: f_1(x_1*) = c(x*), f_i(x_i*) = 0 otherwise,
/// with A_i = {x_i*}. The output sums to c(x*) at the seed.
template <typename Scalar>
ConvexifyResult<Scalar> multi_c_convexify_seeded(const std::vector<Index>& seed, const MultiCost<Scalar>& cost,
                                                 const std::vector<MatrixX<Scalar>>& supports,
                                                 const SolverConfig& cfg = {}) {
  if (seed.size() != supports.size()) throw Error(ErrorCode::InvalidInput, "seed needs one index per marginal");
  const ProductTable<Scalar> t(supports, cost);
  Index flat = 0;
  for (std::size_t a = 0; a < seed.size(); ++a) {
    if (seed[a] < 0 || seed[a] >= t.shape[a]) throw Error(ErrorCode::InvalidInput, "seed index out of range");
    flat += seed[a] * t.strides[a];
  }
  std::vector<SampledFunction<Scalar>> partial;
  for (std::size_t a = 0; a < seed.size(); ++a) {
    const Scalar v = a == 0 ? t.cost(flat) : Scalar(0);
    partial.emplace_back(MatrixX<Scalar>(supports[a].col(seed[a])), VectorX<Scalar>::Constant(1, v));
  }
  return multi_c_convexify(partial, cost, supports, cfg);
}

template <typename Scalar>
struct NormalizedPotentials {
  MultiPotentials<Scalar> potentials;
  std::vector<Scalar> shifts;  // h_i, summing to zero
  Scalar bound{0};             // max(k, 3) * max |c|
};

/// Adds constants h_i summing to zero so that sup f_i = max|c| for i >= 2; every potential is
/// then bounded by max(k, 3) * max|c|. Requires the fixed-point identity within 1e-8.
template <typename Scalar>
NormalizedPotentials<Scalar> normalize_potentials(const MultiPotentials<Scalar>& pots, const MultiCost<Scalar>& cost,
                                                  const std::vector<MatrixX<Scalar>>& supports) {
  const ProductTable<Scalar> t(supports, cost);
  auto f = detail::aligned_values(pots, t);
  const Scalar residual = detail::fixed_point_residual(t, f);
  if (residual > Scalar(1e-8)) {
    throw Error(ErrorCode::NotAFixedPoint, "fixed-point residual " + std::to_string(static_cast<double>(residual)));
  }
  const std::size_t k = f.size();
  const Scalar M = t.cost.cwiseAbs().maxCoeff();
  NormalizedPotentials<Scalar> out;
  out.shifts.assign(k, Scalar(0));
  Scalar rest(0);
  for (std::size_t a = 1; a < k; ++a) {
    out.shifts[a] = M - f[a].maxCoeff();
    rest += out.shifts[a];
  }
  out.shifts[0] = -rest;
  for (std::size_t a = 0; a < k; ++a) {
    f[a].array() += out.shifts[a];
    out.potentials.f.emplace_back(supports[a], f[a]);
  }
  out.bound = Scalar(std::max<std::size_t>(k, 3)) * M;
  return out;
}

/// Largest sum_i f_i(x_i) - c(x) over the product support.
template <typename Scalar>
Scalar multi_dual_violation(const MultiPotentials<Scalar>& p, const MultiCost<Scalar>& cost,
                            const std::vector<MatrixX<Scalar>>& supports) {
  const ProductTable<Scalar> t(supports, cost);
  const auto f = detail::aligned_values(p, t);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index flat = 0; flat < t.size(); ++flat) {
    Scalar s = -t.cost(flat);
    for (std::size_t a = 0; a < f.size(); ++a) s += f[a](t.coord(flat, a));
    worst = std::max(worst, s);
  }
  return worst;
}

/// Fixed-point residual of potentials on the given supports.
template <typename Scalar>
Scalar fixed_point_residual(const MultiPotentials<Scalar>& p, const MultiCost<Scalar>& cost,
                            const std::vector<MatrixX<Scalar>>& supports) {
  const ProductTable<Scalar> t(supports, cost);
  return detail::fixed_point_residual(t, detail::aligned_values(p, t));
}

}  // namespace choquet
