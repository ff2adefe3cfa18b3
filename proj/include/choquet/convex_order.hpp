#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "choquet/cost.hpp"
#include "choquet/lp.hpp"
#include "choquet/measures.hpp"
#include "choquet/ot.hpp"

namespace choquet {

/// Threshold on the smallest singular value of centered atom columns.
inline constexpr double kAffineIndependenceTol = 1e-9;
/// Barycenter tolerance for fans and fibers.
inline constexpr double kBarycenterTol = 1e-9;
/// Kernel entries of a disintegrated row below this fraction of the row mass are treated as zero.
inline constexpr double kFiberDropTol = 1e-13;

/// Piecewise-affine convex function max_k <slope_k, y> + intercept_k.
template <typename Scalar>
struct ConvexWitness {
  MatrixX<Scalar> slopes;      // dim x pieces
  VectorX<Scalar> intercepts;  // one per piece
  Scalar gap{0};               // int f dmu - int f dnu

  Scalar operator()(const PointRef<Scalar>& y) const {
    return (slopes.transpose() * y + intercepts).maxCoeff();
  }
};

template <typename Scalar>
Scalar integrate(const ConvexWitness<Scalar>& f, const DiscreteMeasure<Scalar>& m) {
  Scalar total(0);
  for (Index i = 0; i < m.size(); ++i) total += m.weight(i) * f(m.point(i));
  return total;
}

/// InOrder carries a martingale coupling; NotInOrder carries a convex witness.
template <typename Scalar>
struct OrderCertificate {
  bool in_order = false;
  std::optional<Coupling<Scalar>> coupling;
  std::optional<ConvexWitness<Scalar>> witness;
};

namespace detail {

/// Martingale transport rows over pi flattened row-major: m row sums, n column sums,
/// then dim barycenter rows per source point.
template <typename Scalar>
LinearProgram<Scalar> martingale_program(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu) {
  require_same_dim(mu, nu);
  const Index m = mu.size(), n = nu.size(), d = mu.dim();
  LinearProgram<Scalar> lp(m * n);
  lp.resize_constraints(m + n + m * d);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index col = i * n + j;
      lp.A(i, col) = Scalar(1);
      lp.A(m + j, col) = Scalar(1);
      for (Index k = 0; k < d; ++k) lp.A(m + n + i * d + k, col) = nu.point(j)(k) - mu.point(i)(k);
    }
    lp.set_constraint(i, Relation::Equal, mu.weight(i));
  }
  for (Index j = 0; j < n; ++j) lp.set_constraint(m + j, Relation::Equal, nu.weight(j));
  for (Index r = m + n; r < m + n + m * d; ++r) lp.set_constraint(r, Relation::Equal, Scalar(0));
  return lp;
}

/// Witness f(y) = max_i a_i + <g_i, y - x_i> from a Farkas vector z = (a, b, g) of the martingale rows.
template <typename Scalar>
ConvexWitness<Scalar> witness_from_farkas(const VectorX<Scalar>& z, const DiscreteMeasure<Scalar>& mu,
                                          const DiscreteMeasure<Scalar>& nu) {
  const Index m = mu.size(), n = nu.size(), d = mu.dim();
  const Scalar scale = std::max(z.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
  ConvexWitness<Scalar> w;
  w.slopes.resize(d, m);
  w.intercepts.resize(m);
  for (Index i = 0; i < m; ++i) {
    w.slopes.col(i) = z.segment(m + n + i * d, d) / scale;
    w.intercepts(i) = z(i) / scale - w.slopes.col(i).dot(mu.point(i));
  }
  w.gap = integrate(w, mu) - integrate(w, nu);
  return w;
}

}  // namespace detail

/// Decides mu <=_cx nu by feasibility of the martingale transport rows.
template <typename Scalar>
OrderCertificate<Scalar> convex_order_check(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu,
                                            const SolverConfig& cfg = {}) {
  const auto lp = detail::martingale_program(mu, nu);
  const auto sol = solve(lp, cfg);
  OrderCertificate<Scalar> cert;
  if (sol.status == LpStatus::Infeasible) {
    cert.witness = detail::witness_from_farkas(sol.farkas, mu, nu);
    return cert;
  }
  detail::require_optimal(sol.status, "martingale feasibility program");
  cert.in_order = true;
  cert.coupling.emplace(mu, nu, detail::unflatten(sol.primal, mu.size(), nu.size()));
  return cert;
}

/// A martingale coupling of (mu, nu); NotInConvexOrder when none exists.
template <typename Scalar>
Coupling<Scalar> strassen_coupling(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu,
                                   const SolverConfig& cfg = {}) {
  auto cert = convex_order_check(mu, nu, cfg);
  if (!cert.in_order) {
    throw Error(ErrorCode::NotInConvexOrder, "no martingale coupling exists (witness gap " +
                                                 std::to_string(static_cast<double>(cert.witness->gap)) + ")");
  }
  return std::move(*cert.coupling);
}

/// Per-source residual |sum_y pi(x, y)(y - x)|, one entry per left point.
template <typename Scalar>
VectorX<Scalar> barycenter_residuals(const Coupling<Scalar>& pi) {
  const auto& L = pi.left();
  const auto& R = pi.right();
  VectorX<Scalar> out(L.size());
  for (Index i = 0; i < L.size(); ++i) {
    const VectorX<Scalar> drift = R.points() * pi.mass().row(i).transpose() - pi.mass().row(i).sum() * L.point(i);
    out(i) = drift.norm();
  }
  return out;
}

template <typename Scalar>
struct Fiber {
  Index source;  // index into the left support
  Point<Scalar> x;
  Scalar mass;
  DiscreteMeasure<Scalar> kernel;
};

/// Conditional laws nu_x = pi(x, .) / mu(x) for each left point of positive mass.
template <typename Scalar>
std::vector<Fiber<Scalar>> disintegrate(const Coupling<Scalar>& pi) {
  std::vector<Fiber<Scalar>> out;
  const auto& R = pi.right();
  for (Index i = 0; i < pi.left().size(); ++i) {
    const Scalar row_mass = pi.mass().row(i).sum();
    if (!(row_mass > Scalar(0))) continue;
    std::vector<Index> keep;
    for (Index j = 0; j < R.size(); ++j) {
      if (pi.mass()(i, j) > Scalar(kFiberDropTol) * row_mass) keep.push_back(j);
    }
    MatrixX<Scalar> pts(R.dim(), static_cast<Index>(keep.size()));
    VectorX<Scalar> w(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      pts.col(static_cast<Index>(k)) = R.point(keep[k]);
      w(static_cast<Index>(k)) = pi.mass()(i, keep[k]);
    }
    w /= w.sum();
    out.push_back({i, pi.left().point(i), row_mass, DiscreteMeasure<Scalar>::derived(std::move(pts), std::move(w))});
  }
  return out;
}

/// Extreme fan (delta_center, sum_i lambda_i delta_{atom_i}).
template <typename Scalar>
struct Fan {
  Point<Scalar> center;
  MatrixX<Scalar> atoms;  // dim x count
  VectorX<Scalar> lambdas;
};

template <typename Scalar>
struct FanEntry {
  Scalar weight;
  Fan<Scalar> fan;
};

template <typename Scalar>
struct FanRepresentation {
  std::vector<FanEntry<Scalar>> entries;
};

/// Smallest singular value of the columns atoms_i - atoms_0 (infinity for a single atom).
template <typename Scalar>
Scalar affine_independence_margin(const MatrixX<Scalar>& atoms) {
  if (atoms.cols() <= 1) return std::numeric_limits<Scalar>::infinity();
  if (atoms.cols() - 1 > atoms.rows()) return Scalar(0);
  const MatrixX<Scalar> centered = atoms.rightCols(atoms.cols() - 1).colwise() - atoms.col(0);
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(centered);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

struct ExtremeVerdict {
  bool extreme = false;
  std::string reason;
};

/// Tests whether (delta_center, nu) is an extreme fan: at most dim+1 atoms, positive weights,
/// affinely independent atoms and barycenter equal to center. The reason names the first failure.
template <typename Scalar>
ExtremeVerdict is_extreme_pair(const PointRef<Scalar>& center, const DiscreteMeasure<Scalar>& nu) {
  if (center.size() != nu.dim()) return {false, "dimension mismatch"};
  if (nu.size() > nu.dim() + 1) {
    return {false, "atom count " + std::to_string(nu.size()) + " exceeds dim+1 = " + std::to_string(nu.dim() + 1)};
  }
  if ((nu.weights().array() <= Scalar(0)).any()) return {false, "nonpositive weight"};
  if (!(affine_independence_margin<Scalar>(nu.points()) > Scalar(kAffineIndependenceTol))) {
    return {false, "atoms are affinely dependent"};
  }
  if ((barycenter(nu) - center).norm() > Scalar(kBarycenterTol)) return {false, "barycenter differs from center"};
  return {true, "extreme fan"};
}

namespace detail {

template <typename Scalar>
struct FanNode {
  Scalar weight;
  VectorX<Scalar> lambdas;  // aligned with `members`
};

}  // namespace detail

/// Decomposes (delta_center, nu) into a mixture of extreme fans.
///
/// While the weighted lifted atoms lambda_i (x_i, 1) are dependent (or the atoms are affinely
/// dependent), t spans the smallest right-singular direction; the measure moves to the two ends
/// lambda (1 + s_+ t) and lambda (1 - s_- t) of the segment where weights stay nonnegative,
/// which drops the lowest-index vanishing atom on each side, and the mass splits in the ratio
/// s_- : s_+. Nodes with identical atom sets are merged.
template <typename Scalar>
FanRepresentation<Scalar> fan_decompose(const PointRef<Scalar>& center, const DiscreteMeasure<Scalar>& nu) {
  if (center.size() != nu.dim()) throw Error(ErrorCode::DimensionMismatch, "center and measure differ in dimension");
  const Scalar drift = (barycenter(nu) - center).norm();
  if (drift > Scalar(kBarycenterTol)) {
    throw Error(ErrorCode::BarycenterMismatch, "barycenter misses the center by " + std::to_string(static_cast<double>(drift)));
  }
  const Index dim = nu.dim();
  using Key = std::vector<Index>;
  // Larger atom sets first so every set is fully merged before it is split.
  auto bigger_first = [](const Key& a, const Key& b) { return a.size() != b.size() ? a.size() > b.size() : a < b; };
  std::map<Key, detail::FanNode<Scalar>, decltype(bigger_first)> pending(bigger_first);

  auto push = [&](Key key, VectorX<Scalar> lambdas, Scalar weight) {
    lambdas /= lambdas.sum();
    auto it = pending.find(key);
    if (it == pending.end()) {
      pending.emplace(std::move(key), detail::FanNode<Scalar>{weight, std::move(lambdas)});
    } else {
      auto& node = it->second;
      node.lambdas = (node.weight * node.lambdas + weight * lambdas) / (node.weight + weight);
      node.weight += weight;
    }
  };

  {
    Key all;
    std::vector<Scalar> lam;
    for (Index i = 0; i < nu.size(); ++i) {
      if (nu.weight(i) > Scalar(0)) {
        all.push_back(i);
        lam.push_back(nu.weight(i));
      }
    }
    push(std::move(all), vector_from(lam), Scalar(1));
  }

  FanRepresentation<Scalar> rep;
  while (!pending.empty()) {
    auto node_it = pending.begin();
    const Key members = node_it->first;
    const detail::FanNode<Scalar> node = node_it->second;
    pending.erase(node_it);
    const Index m = static_cast<Index>(members.size());

    MatrixX<Scalar> atoms(dim, m);
    for (Index i = 0; i < m; ++i) atoms.col(i) = nu.point(members[static_cast<std::size_t>(i)]);

    if (m <= dim + 1 && affine_independence_margin<Scalar>(atoms) > Scalar(kAffineIndependenceTol)) {
      rep.entries.push_back({node.weight, Fan<Scalar>{center, std::move(atoms), node.lambdas}});
      continue;
    }

    MatrixX<Scalar> lifted(dim + 1, m);
    lifted.topRows(dim) = atoms * node.lambdas.asDiagonal();
    lifted.row(dim) = node.lambdas.transpose();
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(lifted, Eigen::ComputeFullV);
    const VectorX<Scalar> t = svd.matrixV().col(m - 1);

    Scalar s_plus = std::numeric_limits<Scalar>::infinity(), s_minus = s_plus;
    Index kill_plus = -1, kill_minus = -1;
    for (Index i = 0; i < m; ++i) {
      if (t(i) < Scalar(0) && -Scalar(1) / t(i) < s_plus) {
        s_plus = -Scalar(1) / t(i);
        kill_plus = i;
      }
      if (t(i) > Scalar(0) && Scalar(1) / t(i) < s_minus) {
        s_minus = Scalar(1) / t(i);
        kill_minus = i;
      }
    }
    if (kill_plus < 0 || kill_minus < 0) {
      throw Error(ErrorCode::NumericalBreakdown, "kernel direction of a dependent fan has one sign");
    }

    auto child = [&](Scalar s, Index killed) {
      const VectorX<Scalar> lam = node.lambdas.cwiseProduct((VectorX<Scalar>::Ones(m) + s * t));
      const Scalar floor = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * lam.cwiseAbs().maxCoeff();
      Key key;
      std::vector<Scalar> kept;
      for (Index i = 0; i < m; ++i) {
        if (i == killed || lam(i) <= floor) continue;
        key.push_back(members[static_cast<std::size_t>(i)]);
        kept.push_back(lam(i));
      }
      return std::make_pair(std::move(key), vector_from(kept));
    };
    auto [key_p, lam_p] = child(s_plus, kill_plus);
    auto [key_m, lam_m] = child(-s_minus, kill_minus);
    const Scalar total = s_plus + s_minus;
    push(std::move(key_p), std::move(lam_p), node.weight * s_minus / total);
    push(std::move(key_m), std::move(lam_m), node.weight * s_plus / total);
  }
  return rep;
}

/// Merges (point, mass) pairs with identical points into a measure.
template <typename Scalar>
DiscreteMeasure<Scalar> accumulate_measure(Index dim, const std::vector<std::pair<Point<Scalar>, Scalar>>& parts) {
  PointIndex<Scalar> idx;
  std::vector<Point<Scalar>> pts;
  std::vector<Scalar> w;
  for (const auto& [p, mass] : parts) {
    auto j = idx.find(p);
    if (j) {
      w[static_cast<std::size_t>(*j)] += mass;
    } else {
      idx.insert(p, static_cast<Index>(pts.size()));
      pts.push_back(p);
      w.push_back(mass);
    }
  }
  MatrixX<Scalar> P(dim, static_cast<Index>(pts.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) P.col(static_cast<Index>(j)) = pts[j];
  return DiscreteMeasure<Scalar>::derived(std::move(P), vector_from(w));
}

/// The pair (sum w delta_center, sum w * fan measure) represented by a mixture of fans.
template <typename Scalar>
std::pair<DiscreteMeasure<Scalar>, DiscreteMeasure<Scalar>> recompose(const FanRepresentation<Scalar>& rep) {
  if (rep.entries.empty()) throw Error(ErrorCode::InvalidInput, "empty representation");
  const Index dim = rep.entries.front().fan.center.size();
  std::vector<std::pair<Point<Scalar>, Scalar>> first, second;
  for (const auto& e : rep.entries) {
    first.emplace_back(e.fan.center, e.weight);
    for (Index i = 0; i < e.fan.atoms.cols(); ++i) second.emplace_back(e.fan.atoms.col(i), e.weight * e.fan.lambdas(i));
  }
  return {accumulate_measure(dim, first), accumulate_measure(dim, second)};
}

/// Largest total-variation distance between the recomposed pair and (mu, nu).
template <typename Scalar>
Scalar recomposition_error(const FanRepresentation<Scalar>& rep, const DiscreteMeasure<Scalar>& mu,
                           const DiscreteMeasure<Scalar>& nu) {
  const auto [a, b] = recompose(rep);
  return std::max(total_variation(a, mu), total_variation(b, nu));
}

/// Fan decomposition of every fiber of a martingale coupling, weighted by the fiber mass.
template <typename Scalar>
FanRepresentation<Scalar> choquet_represent(const Coupling<Scalar>& pi) {
  FanRepresentation<Scalar> rep;
  for (const auto& fiber : disintegrate(pi)) {
    const auto part = fan_decompose<Scalar>(fiber.x, fiber.kernel);
    for (const auto& e : part.entries) rep.entries.push_back({fiber.mass * e.weight, e.fan});
  }
  return rep;
}

/// Choquet representation of a convex-order pair: martingale coupling, its fibers, and the fan
/// decomposition of each fiber, weighted by mu(x). Entries are ordered by left support index.
template <typename Scalar>
FanRepresentation<Scalar> choquet_represent(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu,
                                            const SolverConfig& cfg = {}) {
  return choquet_represent(strassen_coupling(mu, nu, cfg));
}

/// sum over entries of w * sum_i lambda_i c(center, atom_i).
template <typename Scalar, PairCost<Scalar> Cost>
Scalar representation_cost(const FanRepresentation<Scalar>& rep, const Cost& cost) {
  Scalar total(0);
  for (const auto& e : rep.entries) {
    Scalar inner(0);
    for (Index i = 0; i < e.fan.atoms.cols(); ++i) {
      inner += e.fan.lambdas(i) * static_cast<Scalar>(cost(e.fan.center, e.fan.atoms.col(i)));
    }
    total += e.weight * inner;
  }
  return total;
}

}  // namespace choquet
