#pragma once

#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "choquet/common.hpp"

namespace choquet {

/// Anything callable as cost(x, y) on two points of equal dimension.
template <typename Cost, typename Scalar>
concept PairCost = requires(const Cost& c, const PointRef<Scalar>& x, const PointRef<Scalar>& y) {
  { c(x, y) } -> std::convertible_to<Scalar>;
};

enum class CostKind {
  Euclidean,
  SqEuclidean,
  Manhattan,
  TruncatedEuclidean,
  Linear,
  Matrix,
  Conical,
  Power,
  Scaled,
  Zero,
};

inline const char* to_string(CostKind k) {
  switch (k) {
    case CostKind::Euclidean: return "euclidean";
    case CostKind::SqEuclidean: return "sq_euclidean";
    case CostKind::Manhattan: return "manhattan";
    case CostKind::TruncatedEuclidean: return "truncated_euclidean";
    case CostKind::Linear: return "linear";
    case CostKind::Matrix: return "matrix";
    case CostKind::Conical: return "conical_combination";
    case CostKind::Power: return "power";
    case CostKind::Scaled: return "scaled";
    case CostKind::Zero: return "zero";
  }
  return "unknown";
}

/// Evaluatable pairwise cost c(x, y) with optional Lipschitz metadata.
///
/// Closed forms: euclidean |x-y|, sq_euclidean |x-y|^2, manhattan |x-y|_1,
/// truncated_euclidean min(|x-y|, threshold), linear <a, y-x>, power |x-y|^p,
/// scaled factor*c, zero. `matrix` looks both points up on a grid (exact match, no
/// interpolation); `conical` is sum_i w_i c_i with w_i >= 0.
template <typename Scalar>
class CostSpec {
 public:
  CostSpec() : kind_(CostKind::Euclidean) { set_default_metadata(); }

  static CostSpec euclidean() { return CostSpec(CostKind::Euclidean); }
  static CostSpec sq_euclidean() { return CostSpec(CostKind::SqEuclidean); }
  static CostSpec manhattan() { return CostSpec(CostKind::Manhattan); }
  static CostSpec zero() { return CostSpec(CostKind::Zero); }

  static CostSpec truncated_euclidean(Scalar threshold) {
    if (!(threshold > Scalar(0))) throw Error(ErrorCode::InvalidInput, "truncation threshold must be positive");
    CostSpec c(CostKind::TruncatedEuclidean);
    c.threshold_ = threshold;
    return c;
  }

  static CostSpec linear(VectorX<Scalar> a) {
    CostSpec c(CostKind::Linear);
    c.a_ = std::move(a);
    c.lipschitz_ = c.growth_ = c.a_.norm();
    return c;
  }

  static CostSpec power(Scalar p) {
    if (!(p > Scalar(0))) throw Error(ErrorCode::InvalidInput, "power exponent must be positive");
    CostSpec c(CostKind::Power);
    c.threshold_ = p;
    if (p == Scalar(1)) c.lipschitz_ = c.growth_ = Scalar(1);
    return c;
  }

  static CostSpec scaled(Scalar factor, CostSpec inner) {
    CostSpec c(CostKind::Scaled);
    c.factor_ = factor;
    if (inner.lipschitz_) c.lipschitz_ = std::abs(factor) * *inner.lipschitz_;
    if (inner.growth_) c.growth_ = std::abs(factor) * *inner.growth_;
    c.terms_.push_back(std::move(inner));
    return c;
  }

  /// Grid cost: values(i, j) = c(grid_i, grid_j).
  static CostSpec matrix(MatrixX<Scalar> grid, MatrixX<Scalar> values) {
    if (values.rows() != grid.cols() || values.cols() != grid.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "matrix cost: values must be |grid| x |grid|");
    }
    CostSpec c(CostKind::Matrix);
    c.grid_ = std::move(grid);
    c.values_ = std::move(values);
    c.grid_index_ = PointIndex<Scalar>();
    for (Index j = 0; j < c.grid_.cols(); ++j) {
      if (!c.grid_index_.insert(c.grid_.col(j), j)) throw Error(ErrorCode::DuplicatePoint, "matrix cost grid repeats a point");
    }
    return c;
  }

  static CostSpec conical(std::vector<Scalar> weights, std::vector<CostSpec> terms) {
    if (weights.size() != terms.size()) throw Error(ErrorCode::InvalidInput, "conical combination: weights/terms mismatch");
    CostSpec c(CostKind::Conical);
    Scalar lip(0), grow(0);
    bool have_lip = true, have_grow = true;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= Scalar(0))) throw Error(ErrorCode::InvalidInput, "conical weights must be nonnegative");
      if (terms[i].lipschitz_) lip += weights[i] * *terms[i].lipschitz_; else have_lip = false;
      if (terms[i].growth_) grow += weights[i] * *terms[i].growth_; else have_grow = false;
    }
    if (have_lip) c.lipschitz_ = lip;
    if (have_grow) c.growth_ = grow;
    c.weights_ = std::move(weights);
    c.terms_ = std::move(terms);
    return c;
  }

  CostKind kind() const { return kind_; }
  Scalar threshold() const { return threshold_; }
  Scalar exponent() const { return threshold_; }
  Scalar factor() const { return factor_; }
  const VectorX<Scalar>& slope() const { return a_; }
  const MatrixX<Scalar>& grid() const { return grid_; }
  const MatrixX<Scalar>& grid_values() const { return values_; }
  const std::vector<Scalar>& weights() const { return weights_; }
  const std::vector<CostSpec>& terms() const { return terms_; }

  /// Lipschitz constant L, when known.
  std::optional<Scalar> lipschitz() const { return lipschitz_; }
  /// Growth constant Lambda with |c(x,y)| <= Lambda |x - y|, when known.
  std::optional<Scalar> growth() const { return growth_; }
  CostSpec& set_lipschitz(std::optional<Scalar> l) { lipschitz_ = l; return *this; }
  CostSpec& set_growth(std::optional<Scalar> g) { growth_ = g; return *this; }

  Scalar operator()(const PointRef<Scalar>& x, const PointRef<Scalar>& y) const {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "cost arguments differ in dimension");
    switch (kind_) {
      case CostKind::Euclidean: return (x - y).norm();
      case CostKind::SqEuclidean: return (x - y).squaredNorm();
      case CostKind::Manhattan: return (x - y).template lpNorm<1>();
      case CostKind::TruncatedEuclidean: return std::min((x - y).norm(), threshold_);
      case CostKind::Linear:
        if (a_.size() != x.size()) throw Error(ErrorCode::DimensionMismatch, "linear cost slope has wrong length");
        return a_.dot(y - x);
      case CostKind::Power: return std::pow((x - y).norm(), threshold_);
      case CostKind::Scaled: return factor_ * terms_.front()(x, y);
      case CostKind::Zero: return Scalar(0);
      case CostKind::Matrix: {
        if (x.size() != grid_.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix cost grid has another dimension");
        auto i = grid_index_.find(x);
        auto j = grid_index_.find(y);
        if (!i || !j) throw Error(ErrorCode::OffGrid, "matrix cost queried off its grid");
        return values_(*i, *j);
      }
      case CostKind::Conical: {
        Scalar total(0);
        for (std::size_t t = 0; t < terms_.size(); ++t) total += weights_[t] * terms_[t](x, y);
        return total;
      }
    }
    return Scalar(0);
  }

 private:
  explicit CostSpec(CostKind kind) : kind_(kind) { set_default_metadata(); }

  void set_default_metadata() {
    switch (kind_) {
      case CostKind::Euclidean:
      case CostKind::TruncatedEuclidean:
        lipschitz_ = growth_ = Scalar(1);
        break;
      case CostKind::Zero:
        lipschitz_ = growth_ = Scalar(0);
        break;
      default:
        break;
    }
  }

  CostKind kind_;
  Scalar threshold_{0};
  Scalar factor_{1};
  VectorX<Scalar> a_;
  MatrixX<Scalar> grid_;
  MatrixX<Scalar> values_;
  PointIndex<Scalar> grid_index_;
  std::vector<Scalar> weights_;
  std::vector<CostSpec> terms_;
  std::optional<Scalar> lipschitz_;
  std::optional<Scalar> growth_;
};

using CostSpecd = CostSpec<double>;

/// evaluate_cost: c(x, y), raising DimensionMismatch / OffGrid.
template <typename Scalar>
Scalar evaluate_cost(const CostSpec<Scalar>& c, const std::type_identity_t<PointRef<Scalar>>& x,
                     const std::type_identity_t<PointRef<Scalar>>& y) {
  return c(x, y);
}

/// Matrix of cost(X_i, Y_j) over two point sets.
template <typename Scalar, PairCost<Scalar> Cost>
MatrixX<Scalar> cost_matrix(const Cost& cost, const MatrixX<Scalar>& xs, const MatrixX<Scalar>& ys) {
  if (xs.rows() != ys.rows()) throw Error(ErrorCode::DimensionMismatch, "point sets differ in dimension");
  MatrixX<Scalar> out(xs.cols(), ys.cols());
  for (Index i = 0; i < xs.cols(); ++i) {
    for (Index j = 0; j < ys.cols(); ++j) out(i, j) = static_cast<Scalar>(cost(xs.col(i), ys.col(j)));
  }
  return out;
}

/// Cost on a product of k supports.
///
/// pairwise_sum: sum_{i<j} c(x_i, x_j). tensor: explicit values flattened with the last
/// index fastest, valid only for supports of the matching shape.
template <typename Scalar>
class MultiCost {
 public:
  enum class Kind { PairwiseSum, Tensor };

  static MultiCost pairwise_sum(CostSpec<Scalar> pair) {
    MultiCost m;
    m.kind_ = Kind::PairwiseSum;
    m.pair_ = std::move(pair);
    return m;
  }

  static MultiCost tensor(std::vector<Index> shape, VectorX<Scalar> values) {
    Index n = 1;
    for (Index s : shape) n *= s;
    if (n != values.size()) throw Error(ErrorCode::DimensionMismatch, "tensor cost: shape and values disagree");
    MultiCost m;
    m.kind_ = Kind::Tensor;
    m.shape_ = std::move(shape);
    m.values_ = std::move(values);
    return m;
  }

  Kind kind() const { return kind_; }
  const CostSpec<Scalar>& pair() const { return pair_; }
  const std::vector<Index>& shape() const { return shape_; }
  const VectorX<Scalar>& values() const { return values_; }

  /// Flattened cost over the product of the given point sets.
  VectorX<Scalar> evaluate(const std::vector<MatrixX<Scalar>>& supports) const {
    std::vector<Index> shape;
    Index n = 1;
    for (const auto& s : supports) {
      shape.push_back(s.cols());
      n *= s.cols();
    }
    if (kind_ == Kind::Tensor) {
      if (shape != shape_) throw Error(ErrorCode::DimensionMismatch, "tensor cost shape does not match the supports");
      return values_;
    }
    const std::size_t k = supports.size();
    std::vector<MatrixX<Scalar>> pair_tables(k * k);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) pair_tables[a * k + b] = cost_matrix<Scalar>(pair_, supports[a], supports[b]);
    }
    VectorX<Scalar> out(n);
    std::vector<Index> idx(k, 0);
    for (Index flat = 0; flat < n; ++flat) {
      Scalar total(0);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) total += pair_tables[a * k + b](idx[a], idx[b]);
      }
      out(flat) = total;
      for (std::size_t a = k; a-- > 0;) {
        if (++idx[a] < shape[a]) break;
        idx[a] = 0;
      }
    }
    return out;
  }

 private:
  MultiCost() = default;

  Kind kind_ = Kind::PairwiseSum;
  CostSpec<Scalar> pair_;
  std::vector<Index> shape_;
  VectorX<Scalar> values_;
};

using MultiCostd = MultiCost<double>;

struct MetricViolation {
  Index a = -1, b = -1, c = -1;
  std::string clause;
};

/// Checks symmetry, zero diagonal, positivity off the diagonal and the triangle inequality
/// of a cost matrix over all triples. Returns the first violation found.
template <typename Scalar>
std::optional<MetricViolation> find_metric_violation(const MatrixX<Scalar>& d, Scalar tol) {
  const Index m = d.rows();
  for (Index i = 0; i < m; ++i) {
    if (std::abs(d(i, i)) > tol) return MetricViolation{i, i, i, "nonzero diagonal"};
    for (Index j = i + 1; j < m; ++j) {
      if (std::abs(d(i, j) - d(j, i)) > tol) return MetricViolation{i, j, j, "asymmetric"};
      if (d(i, j) <= Scalar(0)) return MetricViolation{i, j, j, "distinct points at distance zero"};
    }
  }
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      for (Index k = 0; k < m; ++k) {
        if (d(i, k) > d(i, j) + d(j, k) + tol) return MetricViolation{i, j, k, "triangle inequality"};
      }
    }
  }
  return std::nullopt;
}

}  // namespace choquet
