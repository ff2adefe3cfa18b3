#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "choquet/cost.hpp"
#include "choquet/evaluator.hpp"
#include "choquet/lp.hpp"
#include "choquet/measures.hpp"
#include "choquet/ot.hpp"

namespace choquet {

inline constexpr double kGammaTol = 1e-9;
inline constexpr double kRestrictionTol = 1e-9;

/// Samples f1(xbar) - sum lambda_i f2(x_i) <= sum lambda_i c(xbar, x_i) and reports the first
/// violation above tol. Box domains draw atoms uniformly; finite domains draw the barycenter
/// and the atoms from the set.
template <typename Scalar, PairCost<Scalar> Cost>
SimplexReport<Scalar> simplex_inequality_check(const FunctionEvaluator<Scalar>& f1, const FunctionEvaluator<Scalar>& f2,
                                               const Cost& cost, const Domain<Scalar>& domain, Index n_samples,
                                               std::uint64_t seed, Scalar tol = Scalar(kSimplexTol)) {
  return detail::run_simplex_samples<Scalar>(
      domain, n_samples, seed, tol, false, [&](const SimplexSample<Scalar>& s, const std::optional<Point<Scalar>>&) {
        Scalar rhs(0), avg(0);
        for (Index i = 0; i < s.atoms.cols(); ++i) {
          avg += s.lambdas(i) * f2(s.atoms.col(i));
          rhs += s.lambdas(i) * static_cast<Scalar>(cost(s.barycenter, s.atoms.col(i)));
        }
        return f1(s.barycenter) - avg - rhs;
      });
}

/// Restricts the y constraints of gamma_certify. With a box, y must share the boundary
/// coordinates of x (same face); without one every y is used.
template <typename Scalar>
struct FaceRule {
  std::optional<std::pair<VectorX<Scalar>, VectorX<Scalar>>> box;

  static FaceRule all_points() { return {}; }
  static FaceRule box_faces(VectorX<Scalar> lo, VectorX<Scalar> hi) { return {std::make_pair(std::move(lo), std::move(hi))}; }

  bool admits(const PointRef<Scalar>& x, const PointRef<Scalar>& y) const {
    if (!box) return true;
    for (Index k = 0; k < x.size(); ++k) {
      const bool on_lo = std::abs(x(k) - box->first(k)) <= Scalar(1e-12);
      const bool on_hi = std::abs(x(k) - box->second(k)) <= Scalar(1e-12);
      if ((on_lo || on_hi) && y(k) != x(k)) return false;
    }
    return true;
  }

  const char* name() const { return box ? "box_faces" : "all_points"; }
};

/// Point x with no feasible gamma. The listed y rows with the given nonnegative multipliers m_y
/// satisfy sum m_y (y - x) = 0 and sum m_y (c(x, y) - f1(x) + f2(y)) = margin < 0.
template <typename Scalar>
struct GammaCounterexample {
  Index index;
  Point<Scalar> x;
  MatrixX<Scalar> ys;
  VectorX<Scalar> multipliers;
  Scalar margin;
};

/// gamma column j certifies f1(x_j) - f2(y) <= c(x_j, y) + <gamma_j, y - x_j> for admitted y.
/// Columns after a counterexample are left zero.
template <typename Scalar>
struct GammaCertificate {
  bool ok = true;
  MatrixX<Scalar> gamma;
  Scalar max_violation = 0;
  std::optional<GammaCounterexample<Scalar>> counterexample;
  std::string face_rule;
};

/// Largest f1(x) - f2(y) - c(x, y) - <gamma(x), y - x> over admitted pairs.
template <typename Scalar, PairCost<Scalar> Cost>
Scalar gamma_violation(const SampledFunction<Scalar>& f1, const SampledFunction<Scalar>& f2, const Cost& cost,
                       const MatrixX<Scalar>& gamma, const FaceRule<Scalar>& faces = {}) {
  if (gamma.cols() != f1.size() || gamma.rows() != f1.dim()) {
    throw Error(ErrorCode::GammaMissing, "gamma must have one column per point of X");
  }
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < f1.size(); ++i) {
    const auto x = f1.point(i);
    for (Index j = 0; j < f2.size(); ++j) {
      const auto y = f2.point(j);
      if (!faces.admits(x, y)) continue;
      worst = std::max(worst, f1.value(i) - f2.value(j) - static_cast<Scalar>(cost(x, y)) - gamma.col(i).dot(y - x));
    }
  }
  return worst;
}

/// Solves, for each x in X, the feasibility problem in gamma(x) over the rows y in Y.
///
/// For y != x the rows are normalized to <gamma, u_y> + bhat_y >= 0 with u_y the unit direction
/// to y. The LP min sum eta_y bhat_y, sum eta_y u_y = 0, sum eta = 1, eta >= 0 gives the best
/// margin; its multipliers on the direction rows give gamma, and when it is infeasible the Farkas
/// ray gives a direction that is scaled until every row holds.
template <typename Scalar, PairCost<Scalar> Cost>
GammaCertificate<Scalar> gamma_certify(const SampledFunction<Scalar>& f1, const SampledFunction<Scalar>& f2,
                                       const Cost& cost, const FaceRule<Scalar>& faces = {}, Scalar tol = Scalar(kGammaTol),
                                       const SolverConfig& cfg = {}) {
  if (f1.dim() != f2.dim()) throw Error(ErrorCode::DimensionMismatch, "X and Y differ in dimension");
  const Index d = f1.dim();
  GammaCertificate<Scalar> out;
  out.gamma = MatrixX<Scalar>::Zero(d, f1.size());
  out.face_rule = faces.name();
  for (Index i = 0; i < f1.size(); ++i) {
    const Point<Scalar> x = f1.point(i);
    std::vector<Index> rows;
    std::vector<Point<Scalar>> dirs;
    std::vector<Scalar> bhat, dist;
    for (Index j = 0; j < f2.size(); ++j) {
      const auto y = f2.point(j);
      if (!faces.admits(x, y)) continue;
      const Scalar slack = static_cast<Scalar>(cost(x, y)) - f1.value(i) + f2.value(j);
      const Scalar r = (y - x).norm();
      if (r == Scalar(0)) {
        if (slack < -tol) {
          out.ok = false;
          out.counterexample = GammaCounterexample<Scalar>{i, x, MatrixX<Scalar>(x), VectorX<Scalar>::Ones(1), slack};
          return out;
        }
        continue;
      }
      rows.push_back(j);
      dirs.push_back((y - x) / r);
      bhat.push_back(slack / r);
      dist.push_back(r);
    }
    const Index n = static_cast<Index>(rows.size());
    if (n == 0) continue;

    LinearProgram<Scalar> lp(n, Sense::Minimize);
    lp.resize_constraints(d + 1);
    for (Index j = 0; j < n; ++j) {
      lp.objective(j) = bhat[static_cast<std::size_t>(j)];
      lp.A.col(j).head(d) = dirs[static_cast<std::size_t>(j)];
      lp.A(d, j) = Scalar(1);
    }
    for (Index k = 0; k < d; ++k) lp.set_constraint(k, Relation::Equal, Scalar(0));
    lp.set_constraint(d, Relation::Equal, Scalar(1));
    const auto sol = solve(lp, cfg);

    VectorX<Scalar> g(d);
    if (sol.status == LpStatus::Optimal) {
      if (sol.value < -tol) {
        std::vector<Index> support;
        for (Index j = 0; j < n; ++j) {
          if (sol.primal(j) > Scalar(0)) support.push_back(j);
        }
        GammaCounterexample<Scalar> ce{i, x, MatrixX<Scalar>(d, static_cast<Index>(support.size())),
                                       VectorX<Scalar>(static_cast<Index>(support.size())), sol.value};
        for (std::size_t s = 0; s < support.size(); ++s) {
          const Index j = support[s];
          ce.ys.col(static_cast<Index>(s)) = f2.point(rows[static_cast<std::size_t>(j)]);
          ce.multipliers(static_cast<Index>(s)) = sol.primal(j) / dist[static_cast<std::size_t>(j)];
        }
        out.ok = false;
        out.counterexample = std::move(ce);
        return out;
      }
      g = -sol.dual.head(d);
    } else if (sol.status == LpStatus::Infeasible) {
      const VectorX<Scalar> dir = -sol.farkas.head(d);
      Scalar scale(0);
      for (Index j = 0; j < n; ++j) {
        const Scalar along = dir.dot(dirs[static_cast<std::size_t>(j)]);
        if (along <= Scalar(0)) throw Error(ErrorCode::NumericalBreakdown, "Farkas direction is not strictly separating");
        scale = std::max(scale, -bhat[static_cast<std::size_t>(j)] / along);
      }
      g = scale * dir;
    } else {
      detail::require_optimal(sol.status, "gamma certification program");
    }
    out.gamma.col(i) = g;
  }
  out.max_violation = std::max(Scalar(0), gamma_violation(f1, f2, cost, out.gamma, faces));
  return out;
}

/// f(x) = max_k b_k - c(y_k, x) - <gamma(y_k), x - y_k> with gamma(y_k) = -a_k.
template <typename Scalar>
FunctionEvaluator<Scalar> bclass_generate(std::vector<BAtom<Scalar>> atoms, CostSpec<Scalar> cost) {
  return FunctionEvaluator<Scalar>::bclass_sup(std::move(atoms), std::move(cost));
}

/// Extension of g from K: gtilde0(z) = max_{y in K} g(y) - c(y, z) - <gamma(y), z - y>,
/// followed by the pointwise max with lower_bound when one is supplied.
template <typename Scalar>
SampledFunction<Scalar> extend(const SampledFunction<Scalar>& g, const CostSpec<Scalar>& cost, const MatrixX<Scalar>& gamma,
                               const MatrixX<Scalar>& targets,
                               const std::optional<FunctionEvaluator<Scalar>>& lower_bound = std::nullopt) {
  if (gamma.cols() != g.size() || gamma.rows() != g.dim() || !all_finite(gamma)) {
    throw Error(ErrorCode::GammaMissing, "gamma must give a finite vector at every point of K");
  }
  if (targets.rows() != g.dim()) throw Error(ErrorCode::DimensionMismatch, "targets differ in dimension from K");
  if (!cost.growth()) throw Error(ErrorCode::InvalidInput, "extension needs a growth constant for the cost");
  if (lower_bound) {
    for (Index j = 0; j < g.size(); ++j) {
      const Scalar f = (*lower_bound)(g.point(j));
      if (f > g.value(j) + Scalar(kRestrictionTol)) {
        throw Error(ErrorCode::LowerBoundViolation,
                    "lower bound exceeds g at " + describe_point<Scalar>(g.point(j)) + " by " +
                        std::to_string(static_cast<double>(f - g.value(j))));
      }
    }
  }
  VectorX<Scalar> values(targets.cols());
  for (Index t = 0; t < targets.cols(); ++t) {
    const auto z = targets.col(t);
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < g.size(); ++j) {
      const auto y = g.point(j);
      best = std::max(best, g.value(j) - cost(y, z) - gamma.col(j).dot(z - y));
    }
    if (lower_bound) best = std::max(best, (*lower_bound)(z));
    values(t) = best;
  }
  return SampledFunction<Scalar>(targets, std::move(values));
}

/// First failing triple of the one-dimensional difference-quotient bounds.
template <typename Scalar>
struct SlopeBoundViolation {
  Scalar x1, x2, x3;
  bool lower;
  Scalar excess;
};

template <typename Scalar>
struct SlopeBoundReport {
  bool ok = true;
  std::optional<SlopeBoundViolation<Scalar>> violation;
  Index triples = 0;
};

/// For a 1-D g with sum lambda_i g(x_i) - g(xbar) <= sum lambda_i c(xbar, x_i), checks for every
/// sampled x1 < x2 < x3 that (g(x3) - g(x1)) / (x3 - x1) lies between
///   (g(x3) - g(x2)) / (x3 - x2) + (c(x2, x3) - c(x2, x1)) / (x3 - x1) - c(x2, x3) / (x3 - x2)
/// and
///   (g(x2) - g(x1)) / (x2 - x1) + (c(x2, x3) - c(x2, x1)) / (x3 - x1) + c(x2, x1) / (x2 - x1).
/// A B-class f satisfies the hypothesis with g = -f.
template <typename Scalar, PairCost<Scalar> Cost>
SlopeBoundReport<Scalar> slope_bounds_check(const SampledFunction<Scalar>& g, const Cost& cost,
                                            Scalar tol = Scalar(kSimplexTol)) {
  if (g.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "slope bounds need a function of one variable");
  std::vector<Index> order(static_cast<std::size_t>(g.size()));
  for (Index i = 0; i < g.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return g.point(a)(0) < g.point(b)(0); });
  SlopeBoundReport<Scalar> rep;
  const auto c = [&](Scalar a, Scalar b) {
    return static_cast<Scalar>(cost(VectorX<Scalar>::Constant(1, a), VectorX<Scalar>::Constant(1, b)));
  };
  const std::size_t n = order.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const Scalar x1 = g.point(order[i])(0), x2 = g.point(order[j])(0), x3 = g.point(order[k])(0);
        const Scalar g1 = g.value(order[i]), g2 = g.value(order[j]), g3 = g.value(order[k]);
        const Scalar c21 = c(x2, x1), c23 = c(x2, x3);
        const Scalar mid = (g3 - g1) / (x3 - x1);
        const Scalar shift = (c23 - c21) / (x3 - x1);
        const Scalar lower = (g3 - g2) / (x3 - x2) + shift - c23 / (x3 - x2);
        const Scalar upper = (g2 - g1) / (x2 - x1) + shift + c21 / (x2 - x1);
        ++rep.triples;
        if (lower - mid > tol) {
          rep.ok = false;
          rep.violation = SlopeBoundViolation<Scalar>{x1, x2, x3, true, lower - mid};
          return rep;
        }
        if (mid - upper > tol) {
          rep.ok = false;
          rep.violation = SlopeBoundViolation<Scalar>{x1, x2, x3, false, mid - upper};
          return rep;
        }
      }
    }
  }
  return rep;
}

enum class ModulusKind { Power, Zero, Custom };

/// Modulus sigma on [0, diam]: scale * t^p, zero, or piecewise-linear samples.
template <typename Scalar>
class ModulusSpec {
 public:
  static ModulusSpec power(Scalar p, Scalar scale = Scalar(1)) {
    if (!(p > Scalar(0))) throw Error(ErrorCode::InvalidInput, "modulus exponent must be positive");
    ModulusSpec m(ModulusKind::Power);
    m.p_ = p;
    m.scale_ = scale;
    return m;
  }

  static ModulusSpec zero() { return ModulusSpec(ModulusKind::Zero); }

  /// Linear interpolation through (ts_i, values_i); ts strictly increasing from 0 with value 0 there.
  static ModulusSpec custom(std::vector<Scalar> ts, std::vector<Scalar> values) {
    if (ts.size() != values.size() || ts.size() < 2) throw Error(ErrorCode::InvalidInput, "custom modulus needs two or more samples");
    if (ts.front() != Scalar(0) || values.front() != Scalar(0)) {
      throw Error(ErrorCode::InvalidInput, "custom modulus must start at sigma(0) = 0");
    }
    for (std::size_t i = 1; i < ts.size(); ++i) {
      if (!(ts[i] > ts[i - 1])) throw Error(ErrorCode::InvalidInput, "custom modulus abscissae must increase");
    }
    ModulusSpec m(ModulusKind::Custom);
    m.ts_ = std::move(ts);
    m.values_ = std::move(values);
    return m;
  }

  ModulusKind kind() const { return kind_; }
  Scalar exponent() const { return p_; }
  Scalar scale() const { return scale_; }
  const std::vector<Scalar>& abscissae() const { return ts_; }
  const std::vector<Scalar>& samples() const { return values_; }

  Scalar operator()(Scalar t) const {
    switch (kind_) {
      case ModulusKind::Power: return scale_ * std::pow(t, p_);
      case ModulusKind::Zero: return Scalar(0);
      case ModulusKind::Custom: {
        if (t > ts_.back() * (Scalar(1) + Scalar(1e-12))) {
          throw Error(ErrorCode::InvalidInput, "custom modulus queried beyond its last sample");
        }
        const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
        if (it == ts_.end()) return values_.back();
        const std::size_t k = static_cast<std::size_t>(it - ts_.begin());
        const Scalar w = (t - ts_[k - 1]) / (ts_[k] - ts_[k - 1]);
        return (Scalar(1) - w) * values_[k - 1] + w * values_[k];
      }
    }
    return Scalar(0);
  }

  /// Lambda with |sigma(t)| <= Lambda t on [0, diam], or nullopt when none exists.
  std::optional<Scalar> growth(Scalar diam) const {
    switch (kind_) {
      case ModulusKind::Power:
        if (p_ < Scalar(1)) return std::nullopt;
        return std::abs(scale_) * std::pow(diam, p_ - Scalar(1));
      case ModulusKind::Zero: return Scalar(0);
      case ModulusKind::Custom: {
        Scalar best(0);
        for (std::size_t i = 1; i < ts_.size(); ++i) best = std::max(best, std::abs(values_[i]) / ts_[i]);
        return best;
      }
    }
    return std::nullopt;
  }

 private:
  explicit ModulusSpec(ModulusKind k) : kind_(k) {}

  ModulusKind kind_;
  Scalar p_{1};
  Scalar scale_{1};
  std::vector<Scalar> ts_;
  std::vector<Scalar> values_;
};

using ModulusSpecd = ModulusSpec<double>;

namespace detail {

template <typename Scalar>
Scalar diameter(const MatrixX<Scalar>& pts) {
  Scalar d(0);
  for (Index i = 0; i < pts.cols(); ++i) {
    for (Index j = i + 1; j < pts.cols(); ++j) d = std::max(d, (pts.col(i) - pts.col(j)).norm());
  }
  return d;
}

template <typename Scalar>
void require_modulus(const ModulusSpec<Scalar>& sigma, const MatrixX<Scalar>& grid) {
  if (sigma(Scalar(0)) != Scalar(0)) throw Error(ErrorCode::InvalidInput, "modulus must vanish at 0");
  if (!sigma.growth(diameter(grid))) {
    throw Error(ErrorCode::InvalidInput, "modulus has no linear growth bound on the grid diameter");
  }
}

}  // namespace detail

/// gamma(x) with f(x) + sigma(|y - x|) + <gamma(x), y - x> <= f(y) for every grid y.
template <typename Scalar>
GammaCertificate<Scalar> uniform_convexity_certify(const FunctionEvaluator<Scalar>& f, const ModulusSpec<Scalar>& sigma,
                                                   const MatrixX<Scalar>& grid, const FaceRule<Scalar>& faces = {},
                                                   Scalar tol = Scalar(kGammaTol)) {
  detail::require_modulus(sigma, grid);
  const auto fs = f.sample(grid);
  const auto cost = [&](const PointRef<Scalar>& x, const PointRef<Scalar>& y) { return -sigma((y - x).norm()); };
  auto cert = gamma_certify<Scalar>(fs, fs, cost, faces, tol);
  cert.gamma = -cert.gamma;
  return cert;
}

/// gamma(x) with f(y) <= f(x) + sigma(|y - x|) + <gamma(x), y - x> for every grid y.
template <typename Scalar>
GammaCertificate<Scalar> uniform_smoothness_certify(const FunctionEvaluator<Scalar>& f, const ModulusSpec<Scalar>& sigma,
                                                    const MatrixX<Scalar>& grid, const FaceRule<Scalar>& faces = {},
                                                    Scalar tol = Scalar(kGammaTol)) {
  detail::require_modulus(sigma, grid);
  const auto fs = f.negated().sample(grid);
  const auto cost = [&](const PointRef<Scalar>& x, const PointRef<Scalar>& y) { return sigma((y - x).norm()); };
  return gamma_certify<Scalar>(fs, fs, cost, faces, tol);
}

}  // namespace choquet
