#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "choquet/common.hpp"

namespace choquet {

/// Construction tolerance on total mass: deviations up to this are renormalized away.
inline constexpr double kMassRenormalizeTol = 1e-9;
/// Tolerance for objects derived from solver output (marginals, disintegrations).
inline constexpr double kDerivedMassTol = 1e-10;

/// Finitely supported probability measure on R^dim. Points are the columns of points().
template <typename Scalar>
class DiscreteMeasure {
 public:
  /// Validating constructor: NegativeWeight, DuplicatePoint (exact comparison),
  /// MassNotOne (deviation above 1e-9), DimensionMismatch, NonFinite.
  DiscreteMeasure(MatrixX<Scalar> points, VectorX<Scalar> weights)
      : DiscreteMeasure(std::move(points), std::move(weights), kMassRenormalizeTol) {}

  static DiscreteMeasure dirac(const PointRef<Scalar>& p) {
    MatrixX<Scalar> pts = p;
    return DiscreteMeasure(std::move(pts), VectorX<Scalar>::Ones(1));
  }

  static DiscreteMeasure uniform(MatrixX<Scalar> points) {
    const Index m = points.cols();
    VectorX<Scalar> w = VectorX<Scalar>::Constant(m, Scalar(1) / Scalar(m));
    return DiscreteMeasure(std::move(points), std::move(w));
  }

  /// For measures assembled from solver output: tiny negative weights (above -1e-10)
  /// are clamped and the mass tolerance is 1e-10.
  static DiscreteMeasure derived(MatrixX<Scalar> points, VectorX<Scalar> weights) {
    for (Index i = 0; i < weights.size(); ++i) {
      if (weights(i) < Scalar(0) && weights(i) >= Scalar(-kDerivedMassTol)) weights(i) = Scalar(0);
    }
    return DiscreteMeasure(std::move(points), std::move(weights), kDerivedMassTol);
  }

  Index dim() const { return points_.rows(); }
  Index size() const { return points_.cols(); }
  const MatrixX<Scalar>& points() const { return points_; }
  const VectorX<Scalar>& weights() const { return weights_; }
  auto point(Index i) const { return points_.col(i); }
  Scalar weight(Index i) const { return weights_(i); }

  std::optional<Index> find(const PointRef<Scalar>& p) const {
    if (p.size() != dim()) return std::nullopt;
    return index_.find(p);
  }

 private:
  DiscreteMeasure(MatrixX<Scalar> points, VectorX<Scalar> weights, double mass_tol)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "dimension must be at least 1");
    if (points_.cols() != weights_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "number of points (" + std::to_string(points_.cols()) +
                                                    ") differs from number of weights (" +
                                                    std::to_string(weights_.size()) + ")");
    }
    if (!all_finite(points_) || !all_finite(weights_)) {
      throw Error(ErrorCode::NonFinite, "measure contains non-finite values");
    }
    for (Index i = 0; i < weights_.size(); ++i) {
      if (weights_(i) < Scalar(0)) {
        throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(i) + " is negative");
      }
    }
    index_ = PointIndex<Scalar>();
    for (Index j = 0; j < points_.cols(); ++j) {
      if (!index_.insert(points_.col(j), j)) {
        throw Error(ErrorCode::DuplicatePoint, "point " + std::to_string(j) + " repeats an earlier point");
      }
    }
    const Scalar total = weights_.sum();
    const Scalar deviation = std::abs(total - Scalar(1));
    if (deviation > Scalar(mass_tol)) {
      throw Error(ErrorCode::MassNotOne, "weights sum to " + std::to_string(static_cast<double>(total)));
    }
    if (deviation > Scalar(0)) weights_ /= total;
  }

  MatrixX<Scalar> points_;
  VectorX<Scalar> weights_;
  PointIndex<Scalar> index_;
};

using DiscreteMeasured = DiscreteMeasure<double>;

/// new_measure: validated construction with an explicit ambient dimension.
template <typename Scalar>
DiscreteMeasure<Scalar> make_measure(Index dim, MatrixX<Scalar> points, VectorX<Scalar> weights) {
  if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "dimension must be at least 1");
  if (points.rows() != dim) {
    throw Error(ErrorCode::DimensionMismatch, "points have " + std::to_string(points.rows()) +
                                                  " coordinates, expected " + std::to_string(dim));
  }
  return DiscreteMeasure<Scalar>(std::move(points), std::move(weights));
}

template <typename Scalar>
Point<Scalar> barycenter(const DiscreteMeasure<Scalar>& m) {
  return m.points() * m.weights();
}

/// A real function known on a finite point set (the "map Point -> real" of the API).
template <typename Scalar>
class SampledFunction {
 public:
  SampledFunction() = default;

  SampledFunction(MatrixX<Scalar> points, VectorX<Scalar> values)
      : points_(std::move(points)), values_(std::move(values)) {
    if (points_.cols() != values_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "sampled function: points and values differ in length");
    }
    for (Index j = 0; j < points_.cols(); ++j) {
      if (!index_.insert(points_.col(j), j)) {
        throw Error(ErrorCode::DuplicatePoint, "sampled function: repeated point " + std::to_string(j));
      }
    }
  }

  Index dim() const { return points_.rows(); }
  Index size() const { return points_.cols(); }
  const MatrixX<Scalar>& points() const { return points_; }
  const VectorX<Scalar>& values() const { return values_; }
  VectorX<Scalar>& values() { return values_; }
  auto point(Index i) const { return points_.col(i); }
  Scalar value(Index i) const { return values_(i); }

  std::optional<Index> find(const PointRef<Scalar>& p) const {
    if (p.size() != dim()) return std::nullopt;
    return index_.find(p);
  }

  Scalar at(const PointRef<Scalar>& p) const {
    auto idx = find(p);
    if (!idx) throw Error(ErrorCode::MissingValue, "no value stored at the requested point");
    return values_(*idx);
  }

 private:
  MatrixX<Scalar> points_;
  VectorX<Scalar> values_;
  PointIndex<Scalar> index_;
};

using SampledFunctiond = SampledFunction<double>;

/// integrate: sum of weight_i * values(point_i). Values aligned with the support.
template <typename Scalar>
Scalar integrate(const std::type_identity_t<VectorX<Scalar>>& values, const DiscreteMeasure<Scalar>& m) {
  if (values.size() != m.size()) {
    throw Error(ErrorCode::MissingValue, "value vector does not cover the support");
  }
  return m.weights().dot(values);
}

/// integrate over a function given as point samples; MissingValue if a support point is absent.
template <typename Scalar>
Scalar integrate(const SampledFunction<Scalar>& f, const DiscreteMeasure<Scalar>& m) {
  Scalar total(0);
  for (Index i = 0; i < m.size(); ++i) total += m.weight(i) * f.at(m.point(i));
  return total;
}

/// Joint mass on the product of two supports; rows index the left support.
template <typename Scalar>
class Coupling {
 public:
  /// Entries above -1e-10 are clamped to zero; total mass must be 1 within 1e-10.
  /// When marginal_consistent, row/column sums must reproduce the stored weights within 1e-10.
  Coupling(DiscreteMeasure<Scalar> left, DiscreteMeasure<Scalar> right, MatrixX<Scalar> mass,
           bool marginal_consistent = true)
      : left_(std::move(left)), right_(std::move(right)), mass_(std::move(mass)),
        consistent_(marginal_consistent) {
    if (left_.dim() != right_.dim()) throw Error(ErrorCode::DimensionMismatch, "coupling supports differ in dimension");
    if (mass_.rows() != left_.size() || mass_.cols() != right_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "coupling mass has wrong shape");
    }
    if (!all_finite(mass_)) throw Error(ErrorCode::NonFinite, "coupling mass contains non-finite values");
    for (Index i = 0; i < mass_.rows(); ++i) {
      for (Index j = 0; j < mass_.cols(); ++j) {
        if (mass_(i, j) < Scalar(0)) {
          if (mass_(i, j) < Scalar(-kDerivedMassTol)) throw Error(ErrorCode::NegativeWeight, "negative coupling mass");
          mass_(i, j) = Scalar(0);
        }
      }
    }
    const Scalar total = mass_.sum();
    if (std::abs(total - Scalar(1)) > Scalar(kDerivedMassTol)) {
      throw Error(ErrorCode::MassNotOne, "coupling mass sums to " + std::to_string(static_cast<double>(total)));
    }
    mass_ /= total;
    if (consistent_) {
      const Scalar row_err = (mass_.rowwise().sum() - left_.weights()).cwiseAbs().maxCoeff();
      const Scalar col_err = (mass_.colwise().sum().transpose() - right_.weights()).cwiseAbs().maxCoeff();
      if (std::max(row_err, col_err) > Scalar(kDerivedMassTol)) {
        throw Error(ErrorCode::InvalidInput, "coupling marginals do not reproduce the stored measures");
      }
    }
  }

  /// Product coupling left (x) right.
  static Coupling product(const DiscreteMeasure<Scalar>& left, const DiscreteMeasure<Scalar>& right) {
    return Coupling(left, right, left.weights() * right.weights().transpose());
  }

  const DiscreteMeasure<Scalar>& left() const { return left_; }
  const DiscreteMeasure<Scalar>& right() const { return right_; }
  const MatrixX<Scalar>& mass() const { return mass_; }
  bool marginal_consistent() const { return consistent_; }

 private:
  DiscreteMeasure<Scalar> left_;
  DiscreteMeasure<Scalar> right_;
  MatrixX<Scalar> mass_;
  bool consistent_;
};

using Couplingd = Coupling<double>;

/// Row-sum and column-sum measures over the stored supports.
template <typename Scalar>
std::pair<DiscreteMeasure<Scalar>, DiscreteMeasure<Scalar>> marginals(const Coupling<Scalar>& c) {
  return {DiscreteMeasure<Scalar>::derived(c.left().points(), c.mass().rowwise().sum()),
          DiscreteMeasure<Scalar>::derived(c.right().points(), c.mass().colwise().sum().transpose())};
}

/// Sum of c(x, y) * mass over the coupling; `cost` is a k x l matrix aligned with the supports.
template <typename Scalar>
Scalar coupling_cost(const Coupling<Scalar>& c, const MatrixX<Scalar>& cost) {
  return c.mass().cwiseProduct(cost).sum();
}

/// Dense k-way mass tensor over k supports, flattened with the last axis fastest.
template <typename Scalar>
class MultiCoupling {
 public:
  MultiCoupling(std::vector<DiscreteMeasure<Scalar>> supports, VectorX<Scalar> mass,
                bool marginal_consistent = true)
      : supports_(std::move(supports)), mass_(std::move(mass)), consistent_(marginal_consistent) {
    if (supports_.size() < 2) throw Error(ErrorCode::InvalidInput, "multicoupling needs at least two marginals");
    shape_.reserve(supports_.size());
    Index total_size = 1;
    for (const auto& s : supports_) {
      shape_.push_back(s.size());
      total_size *= s.size();
    }
    if (mass_.size() != total_size) throw Error(ErrorCode::DimensionMismatch, "multicoupling mass has wrong size");
    for (Index i = 0; i < mass_.size(); ++i) {
      if (mass_(i) < Scalar(0)) {
        if (mass_(i) < Scalar(-kDerivedMassTol)) throw Error(ErrorCode::NegativeWeight, "negative multicoupling mass");
        mass_(i) = Scalar(0);
      }
    }
    const Scalar total = mass_.sum();
    if (std::abs(total - Scalar(1)) > Scalar(kDerivedMassTol)) {
      throw Error(ErrorCode::MassNotOne, "multicoupling mass does not sum to one");
    }
    mass_ /= total;
    if (consistent_) {
      for (std::size_t i = 0; i < supports_.size(); ++i) {
        const Scalar err = (marginal_weights(i) - supports_[i].weights()).cwiseAbs().maxCoeff();
        if (err > Scalar(kDerivedMassTol)) {
          throw Error(ErrorCode::InvalidInput, "multicoupling marginal " + std::to_string(i) + " is inconsistent");
        }
      }
    }
  }

  std::size_t order() const { return supports_.size(); }
  const std::vector<Index>& shape() const { return shape_; }
  const std::vector<DiscreteMeasure<Scalar>>& supports() const { return supports_; }
  const VectorX<Scalar>& mass() const { return mass_; }
  bool marginal_consistent() const { return consistent_; }

  /// Axis-i marginal weights, aligned with supports()[i].
  VectorX<Scalar> marginal_weights(std::size_t axis) const {
    VectorX<Scalar> out = VectorX<Scalar>::Zero(shape_[axis]);
    std::vector<Index> idx(shape_.size(), 0);
    for (Index flat = 0; flat < mass_.size(); ++flat) {
      out(idx[axis]) += mass_(flat);
      advance(idx);
    }
    return out;
  }

  DiscreteMeasure<Scalar> marginal(std::size_t axis) const {
    return DiscreteMeasure<Scalar>::derived(supports_[axis].points(), marginal_weights(axis));
  }

  /// Increments a multi-index in flattening order (last axis fastest).
  void advance(std::vector<Index>& idx) const { advance_multi_index(idx, shape_); }

  static void advance_multi_index(std::vector<Index>& idx, const std::vector<Index>& shape) {
    for (std::size_t a = shape.size(); a-- > 0;) {
      if (++idx[a] < shape[a]) return;
      idx[a] = 0;
    }
  }

 private:
  std::vector<DiscreteMeasure<Scalar>> supports_;
  VectorX<Scalar> mass_;
  bool consistent_;
  std::vector<Index> shape_;
};

using MultiCouplingd = MultiCoupling<double>;

/// Total-variation distance sup_A |a(A) - b(A)| between two measures on R^n, matching atoms exactly.
template <typename Scalar>
Scalar total_variation(const DiscreteMeasure<Scalar>& a, const DiscreteMeasure<Scalar>& b) {
  Scalar l1(0);
  for (Index i = 0; i < a.size(); ++i) {
    auto j = b.find(a.point(i));
    l1 += std::abs(a.weight(i) - (j ? b.weight(*j) : Scalar(0)));
  }
  for (Index j = 0; j < b.size(); ++j) {
    if (!a.find(b.point(j))) l1 += b.weight(j);
  }
  return l1 / Scalar(2);
}

}  // namespace choquet
