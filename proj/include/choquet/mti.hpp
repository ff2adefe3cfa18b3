#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>

#include "choquet/cost.hpp"
#include "choquet/evaluator.hpp"

namespace choquet {

/// sum lambda_i c(x, x_i) - c(x, xbar) - sum lambda_i c(xbar, x_i) for the base point x.
template <typename Scalar, PairCost<Scalar> Cost>
Scalar mti_gap(const Cost& cost, const PointRef<Scalar>& x, const MatrixX<Scalar>& atoms, const VectorX<Scalar>& lambdas) {
  const Point<Scalar> bar = atoms * lambdas;
  Scalar gap = -static_cast<Scalar>(cost(x, bar));
  for (Index i = 0; i < atoms.cols(); ++i) {
    gap += lambdas(i) * (static_cast<Scalar>(cost(x, atoms.col(i))) - static_cast<Scalar>(cost(bar, atoms.col(i))));
  }
  return gap;
}

/// Samples base points and simplices as in simplex_inequality_check and reports the first
/// triangle-inequality gap above tol.
template <typename Scalar, PairCost<Scalar> Cost>
SimplexReport<Scalar> mti_check(const Cost& cost, const Domain<Scalar>& domain, Index n_samples, std::uint64_t seed,
                                Scalar tol = Scalar(kSimplexTol)) {
  return detail::run_simplex_samples<Scalar>(
      domain, n_samples, seed, tol, true,
      [&](const SimplexSample<Scalar>& s, const std::optional<Point<Scalar>>& base) {
        return mti_gap<Scalar>(cost, *base, s.atoms, s.lambdas);
      });
}

/// Central-difference Hessian of y -> c(x, y) at y with step h.
template <typename Scalar, PairCost<Scalar> Cost>
MatrixX<Scalar> second_argument_hessian(const Cost& cost, const PointRef<Scalar>& x, const PointRef<Scalar>& y, Scalar h) {
  const Index d = y.size();
  MatrixX<Scalar> H(d, d);
  const auto c = [&](const Point<Scalar>& z) { return static_cast<Scalar>(cost(x, z)); };
  const Scalar c0 = c(y);
  for (Index i = 0; i < d; ++i) {
    Point<Scalar> p = y, m = y;
    p(i) += h;
    m(i) -= h;
    H(i, i) = (c(p) - Scalar(2) * c0 + c(m)) / (h * h);
    for (Index j = i + 1; j < d; ++j) {
      Point<Scalar> pp = y, pm = y, mp = y, mm = y;
      pp(i) += h; pp(j) += h;
      pm(i) += h; pm(j) -= h;
      mp(i) -= h; mp(j) += h;
      mm(i) -= h; mm(j) -= h;
      H(i, j) = H(j, i) = (c(pp) - c(pm) - c(mp) + c(mm)) / (Scalar(4) * h * h);
    }
  }
  return H;
}

template <typename Scalar>
struct HessianReport {
  bool ok = true;
  std::optional<Point<Scalar>> x;
  std::optional<Point<Scalar>> y;
  /// Smallest eigenvalue of D2c(y, y) - D2c(x, y) over all checked pairs (or at the failure).
  Scalar min_eigenvalue = std::numeric_limits<Scalar>::infinity();
  Scalar tol = 0;
  Index pairs = 0;
};

/// Compares D2c(x, y) with D2c(y, y) for interior grid points y and all grid points x != y, and
/// reports the first pair where D2c(y, y) - D2c(x, y) has an eigenvalue below -10 h^2.
template <typename Scalar, PairCost<Scalar> Cost>
HessianReport<Scalar> mti_second_order_check(const Cost& cost, const BoxGrid<Scalar>& grid, Scalar h = Scalar(1e-3)) {
  for (Index c : grid.counts) {
    if (c - 2 < 3) throw Error(ErrorCode::GridTooCoarse, "each grid axis needs three or more interior points");
  }
  if (!(h > Scalar(0))) throw Error(ErrorCode::InvalidInput, "difference step must be positive");
  HessianReport<Scalar> rep;
  rep.tol = Scalar(10) * h * h;
  const MatrixX<Scalar> pts = grid.points();
  const auto interior = grid.interior_mask();
  for (Index j = 0; j < pts.cols(); ++j) {
    if (!interior[static_cast<std::size_t>(j)]) continue;
    const Point<Scalar> y = pts.col(j);
    const MatrixX<Scalar> Hyy = second_argument_hessian<Scalar>(cost, y, y, h);
    for (Index i = 0; i < pts.cols(); ++i) {
      if (i == j) continue;
      const MatrixX<Scalar> D = Hyy - second_argument_hessian<Scalar>(cost, pts.col(i), y, h);
      const Scalar ev = Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>>(D, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      ++rep.pairs;
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, ev);
      if (ev < -rep.tol) {
        rep.ok = false;
        rep.x = Point<Scalar>(pts.col(i));
        rep.y = y;
        rep.min_eigenvalue = ev;
        return rep;
      }
    }
  }
  return rep;
}

}  // namespace choquet
