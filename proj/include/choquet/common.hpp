#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace choquet {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A point of R^n. Point sets are stored column-wise in a MatrixX (dim x count).
template <typename Scalar>
using Point = VectorX<Scalar>;
template <typename Scalar>
using PointRef = Eigen::Ref<const VectorX<Scalar>>;

enum class ErrorCode {
  InvalidInput,
  NonFinite,
  NegativeWeight,
  DuplicatePoint,
  MassNotOne,
  DimensionMismatch,
  OffGrid,
  MissingValue,
  NumericalBreakdown,
  ProductTooLarge,
  NotAMetric,
  InfeasibleInput,
  NotAFixedPoint,
  NotInConvexOrder,
  BarycenterMismatch,
  NonVanishingDiagonal,
  EmptyAtoms,
  GammaMissing,
  LowerBoundViolation,
  GridTooCoarse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::DuplicatePoint: return "DuplicatePoint";
    case ErrorCode::MassNotOne: return "MassNotOne";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OffGrid: return "OffGrid";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::ProductTooLarge: return "ProductTooLarge";
    case ErrorCode::NotAMetric: return "NotAMetric";
    case ErrorCode::InfeasibleInput: return "InfeasibleInput";
    case ErrorCode::NotAFixedPoint: return "NotAFixedPoint";
    case ErrorCode::NotInConvexOrder: return "NotInConvexOrder";
    case ErrorCode::BarycenterMismatch: return "BarycenterMismatch";
    case ErrorCode::NonVanishingDiagonal: return "NonVanishingDiagonal";
    case ErrorCode::EmptyAtoms: return "EmptyAtoms";
    case ErrorCode::GammaMissing: return "GammaMissing";
    case ErrorCode::LowerBoundViolation: return "LowerBoundViolation";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
  }
  return "Unknown";
}

/// Every failure raised by the library carries an ErrorCode; the CLI maps codes to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Tolerances shared by every solver; one value is threaded through all modules.
struct SolverConfig {
  double pivot_tol = 1e-11;
  double feasibility_tol = 1e-9;
  double duality_tol = 1e-7;
  Index max_iterations = 0;  // 0 = derived from problem size
  int verbosity = 0;
  std::ostream* trace = nullptr;  // tableau dumps when verbosity > 0
};

/// Exact-coordinate lookup from points to their column index.
template <typename Scalar>
class PointIndex {
 public:
  PointIndex() = default;

  explicit PointIndex(const MatrixX<Scalar>& points) {
    for (Index j = 0; j < points.cols(); ++j) {
      index_.emplace(key(points.col(j)), j);
    }
  }

  /// Inserts a point; returns false when an identical point is already present.
  bool insert(const PointRef<Scalar>& p, Index j) { return index_.emplace(key(p), j).second; }

  std::optional<Index> find(const PointRef<Scalar>& p) const {
    auto it = index_.find(key(p));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return index_.size(); }

 private:
  static std::vector<Scalar> key(const PointRef<Scalar>& p) {
    return std::vector<Scalar>(p.data(), p.data() + p.size());
  }

  std::map<std::vector<Scalar>, Index> index_;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Builds an n-point matrix from nested initializer data, one inner vector per point.
template <typename Scalar>
MatrixX<Scalar> points_from(const std::vector<std::vector<Scalar>>& rows) {
  if (rows.empty()) return MatrixX<Scalar>(0, 0);
  const Index dim = static_cast<Index>(rows.front().size());
  MatrixX<Scalar> out(dim, static_cast<Index>(rows.size()));
  for (Index j = 0; j < out.cols(); ++j) {
    const auto& r = rows[static_cast<std::size_t>(j)];
    if (static_cast<Index>(r.size()) != dim) {
      throw Error(ErrorCode::DimensionMismatch, "point " + std::to_string(j) + " has wrong length");
    }
    for (Index i = 0; i < dim; ++i) out(i, j) = r[static_cast<std::size_t>(i)];
  }
  return out;
}

/// 1-D convenience: each scalar becomes a point of R^1.
template <typename Scalar>
MatrixX<Scalar> points_1d(const std::vector<Scalar>& xs) {
  MatrixX<Scalar> out(1, static_cast<Index>(xs.size()));
  for (Index j = 0; j < out.cols(); ++j) out(0, j) = xs[static_cast<std::size_t>(j)];
  return out;
}

template <typename Scalar>
VectorX<Scalar> vector_from(const std::vector<Scalar>& xs) {
  return Eigen::Map<const VectorX<Scalar>>(xs.data(), static_cast<Index>(xs.size()));
}

}  // namespace choquet
