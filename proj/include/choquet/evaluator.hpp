#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "choquet/common.hpp"
#include "choquet/cost.hpp"
#include "choquet/measures.hpp"

namespace choquet {

enum class EvaluatorKind { Samples, Quadratic, AbsNorm, NegQuadratic, MaxAffine, BClassSup, Negated, Custom };

inline const char* to_string(EvaluatorKind k) {
  switch (k) {
    case EvaluatorKind::Samples: return "samples";
    case EvaluatorKind::Quadratic: return "quadratic";
    case EvaluatorKind::AbsNorm: return "abs_norm";
    case EvaluatorKind::NegQuadratic: return "neg_quadratic";
    case EvaluatorKind::MaxAffine: return "max_affine";
    case EvaluatorKind::BClassSup: return "bclass_sup";
    case EvaluatorKind::Negated: return "negated";
    case EvaluatorKind::Custom: return "custom";
  }
  return "?";
}

/// One c-affine piece x -> b - c(y, x) + <a, x - y>.
template <typename Scalar>
struct BAtom {
  Point<Scalar> y;
  VectorX<Scalar> a;
  Scalar b;
};

/// A real function on R^n: stored samples or a closed form.
template <typename Scalar>
class FunctionEvaluator {
 public:
  using Fn = std::function<Scalar(const PointRef<Scalar>&)>;

  static FunctionEvaluator samples(SampledFunction<Scalar> s) {
    FunctionEvaluator f(EvaluatorKind::Samples);
    f.samples_ = std::move(s);
    return f;
  }

  /// x^T Q x + <b, x> + c.
  static FunctionEvaluator quadratic(MatrixX<Scalar> Q, VectorX<Scalar> b, Scalar c) {
    return quadratic_like(EvaluatorKind::Quadratic, std::move(Q), std::move(b), c);
  }

  /// -(x^T Q x + <b, x> + c).
  static FunctionEvaluator neg_quadratic(MatrixX<Scalar> Q, VectorX<Scalar> b, Scalar c) {
    return quadratic_like(EvaluatorKind::NegQuadratic, std::move(Q), std::move(b), c);
  }

  /// |x|, the euclidean norm.
  static FunctionEvaluator abs_norm() { return FunctionEvaluator(EvaluatorKind::AbsNorm); }

  /// max_k <slopes_k, x> + intercepts_k, one slope per column.
  static FunctionEvaluator max_affine(MatrixX<Scalar> slopes, VectorX<Scalar> intercepts) {
    if (slopes.cols() != intercepts.size() || slopes.cols() == 0) {
      throw Error(ErrorCode::InvalidInput, "max_affine needs one intercept per slope and at least one piece");
    }
    FunctionEvaluator f(EvaluatorKind::MaxAffine);
    f.Q_ = std::move(slopes);
    f.b_ = std::move(intercepts);
    return f;
  }

  static FunctionEvaluator bclass_sup(std::vector<BAtom<Scalar>> atoms, CostSpec<Scalar> cost) {
    if (atoms.empty()) throw Error(ErrorCode::EmptyAtoms, "bclass_sup needs at least one atom");
    const Index d = atoms.front().y.size();
    for (const auto& at : atoms) {
      if (at.y.size() != d || at.a.size() != d) throw Error(ErrorCode::DimensionMismatch, "atoms differ in dimension");
      if (!all_finite(at.y) || !all_finite(at.a) || !std::isfinite(static_cast<double>(at.b))) {
        throw Error(ErrorCode::NonFinite, "atom has a non-finite entry");
      }
    }
    FunctionEvaluator f(EvaluatorKind::BClassSup);
    f.atoms_ = std::move(atoms);
    f.cost_ = std::move(cost);
    return f;
  }

  static FunctionEvaluator custom(Fn fn, std::string label = "custom") {
    FunctionEvaluator f(EvaluatorKind::Custom);
    f.fn_ = std::move(fn);
    f.label_ = std::move(label);
    return f;
  }

  FunctionEvaluator negated() const {
    FunctionEvaluator f(EvaluatorKind::Negated);
    f.inner_ = std::make_shared<const FunctionEvaluator>(*this);
    return f;
  }

  EvaluatorKind kind() const { return kind_; }
  const SampledFunction<Scalar>& sample_data() const { return samples_; }
  const MatrixX<Scalar>& matrix() const { return Q_; }
  const VectorX<Scalar>& vector() const { return b_; }
  Scalar constant() const { return c_; }
  const std::vector<BAtom<Scalar>>& atoms() const { return atoms_; }
  const CostSpec<Scalar>& cost() const { return cost_; }
  const FunctionEvaluator& inner() const { return *inner_; }
  const std::string& label() const { return label_; }

  /// Dimension fixed by the parameters, or nullopt for dimension-free forms.
  std::optional<Index> dim() const {
    switch (kind_) {
      case EvaluatorKind::Samples: return samples_.dim();
      case EvaluatorKind::Quadratic:
      case EvaluatorKind::NegQuadratic: return Q_.rows();
      case EvaluatorKind::MaxAffine: return Q_.rows();
      case EvaluatorKind::BClassSup: return atoms_.front().y.size();
      case EvaluatorKind::Negated: return inner_->dim();
      default: return std::nullopt;
    }
  }

  Scalar operator()(const PointRef<Scalar>& x) const {
    if (auto d = dim(); d && *d != x.size()) {
      throw Error(ErrorCode::DimensionMismatch, std::string(to_string(kind_)) + " evaluator queried in another dimension");
    }
    switch (kind_) {
      case EvaluatorKind::Samples: return samples_.at(x);
      case EvaluatorKind::Quadratic: return x.dot(Q_ * x) + b_.dot(x) + c_;
      case EvaluatorKind::NegQuadratic: return -(x.dot(Q_ * x) + b_.dot(x) + c_);
      case EvaluatorKind::AbsNorm: return x.norm();
      case EvaluatorKind::MaxAffine: return (Q_.transpose() * x + b_).maxCoeff();
      case EvaluatorKind::BClassSup: {
        Scalar best = -std::numeric_limits<Scalar>::infinity();
        for (const auto& at : atoms_) best = std::max(best, at.b - cost_(at.y, x) + at.a.dot(x - at.y));
        return best;
      }
      case EvaluatorKind::Negated: return -(*inner_)(x);
      case EvaluatorKind::Custom: return fn_(x);
    }
    return Scalar(0);
  }

  /// Values at every column of pts.
  VectorX<Scalar> evaluate(const MatrixX<Scalar>& pts) const {
    VectorX<Scalar> out(pts.cols());
    for (Index j = 0; j < pts.cols(); ++j) out(j) = (*this)(pts.col(j));
    return out;
  }

  SampledFunction<Scalar> sample(const MatrixX<Scalar>& pts) const { return SampledFunction<Scalar>(pts, evaluate(pts)); }

 private:
  explicit FunctionEvaluator(EvaluatorKind k) : kind_(k) {}

  static FunctionEvaluator quadratic_like(EvaluatorKind k, MatrixX<Scalar> Q, VectorX<Scalar> b, Scalar c) {
    if (Q.rows() != Q.cols() || b.size() != Q.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "quadratic needs a square Q and a matching b");
    }
    FunctionEvaluator f(k);
    f.Q_ = std::move(Q);
    f.b_ = std::move(b);
    f.c_ = c;
    return f;
  }

  EvaluatorKind kind_;
  SampledFunction<Scalar> samples_;
  MatrixX<Scalar> Q_;
  VectorX<Scalar> b_;
  Scalar c_{0};
  std::vector<BAtom<Scalar>> atoms_;
  CostSpec<Scalar> cost_;
  std::shared_ptr<const FunctionEvaluator> inner_;
  Fn fn_;
  std::string label_;
};

using FunctionEvaluatord = FunctionEvaluator<double>;

/// Sampling domain: an axis-aligned box or an explicit finite set.
template <typename Scalar>
struct Domain {
  enum class Kind { Box, Finite };
  Kind kind = Kind::Box;
  VectorX<Scalar> lo;
  VectorX<Scalar> hi;
  MatrixX<Scalar> points;

  static Domain box(VectorX<Scalar> lo, VectorX<Scalar> hi) {
    if (lo.size() != hi.size() || lo.size() == 0) throw Error(ErrorCode::DimensionMismatch, "box bounds differ in length");
    if (!all_finite(lo) || !all_finite(hi)) throw Error(ErrorCode::NonFinite, "box bounds must be finite");
    if ((hi.array() < lo.array()).any()) throw Error(ErrorCode::InvalidInput, "box has hi < lo");
    return Domain{Kind::Box, std::move(lo), std::move(hi), {}};
  }

  static Domain interval(Scalar lo, Scalar hi) { return box(VectorX<Scalar>::Constant(1, lo), VectorX<Scalar>::Constant(1, hi)); }

  static Domain finite(MatrixX<Scalar> pts) {
    if (pts.cols() == 0) throw Error(ErrorCode::InvalidInput, "finite domain is empty");
    if (!all_finite(pts)) throw Error(ErrorCode::NonFinite, "finite domain has a non-finite point");
    return Domain{Kind::Finite, {}, {}, std::move(pts)};
  }

  Index dim() const { return kind == Kind::Box ? lo.size() : points.rows(); }
};

/// Regular grid over a box, counts[k] points on axis k (last axis fastest).
template <typename Scalar>
struct BoxGrid {
  VectorX<Scalar> lo;
  VectorX<Scalar> hi;
  std::vector<Index> counts;

  BoxGrid(VectorX<Scalar> lo_, VectorX<Scalar> hi_, std::vector<Index> counts_)
      : lo(std::move(lo_)), hi(std::move(hi_)), counts(std::move(counts_)) {
    if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != counts.size() || counts.empty()) {
      throw Error(ErrorCode::DimensionMismatch, "grid bounds and counts differ in length");
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] < 2 || !(hi(static_cast<Index>(k)) > lo(static_cast<Index>(k)))) {
        throw Error(ErrorCode::InvalidInput, "grid axis needs two or more points and hi > lo");
      }
    }
  }

  /// Uniform grid on [lo, hi]^dim with n points per axis.
  static BoxGrid cube(Index dim, Scalar lo, Scalar hi, Index n) {
    return BoxGrid(VectorX<Scalar>::Constant(dim, lo), VectorX<Scalar>::Constant(dim, hi),
                   std::vector<Index>(static_cast<std::size_t>(dim), n));
  }

  Index dim() const { return lo.size(); }
  Scalar step(Index k) const { return (hi(k) - lo(k)) / Scalar(counts[static_cast<std::size_t>(k)] - 1); }

  Index size() const {
    Index n = 1;
    for (Index c : counts) n *= c;
    return n;
  }

  Scalar coordinate(Index axis, Index i) const {
    if (i == counts[static_cast<std::size_t>(axis)] - 1) return hi(axis);
    return lo(axis) + Scalar(i) * step(axis);
  }

  MatrixX<Scalar> points() const {
    MatrixX<Scalar> out(dim(), size());
    std::vector<Index> idx(counts.size(), 0);
    for (Index j = 0; j < out.cols(); ++j) {
      for (Index k = 0; k < dim(); ++k) out(k, j) = coordinate(k, idx[static_cast<std::size_t>(k)]);
      MultiCoupling<Scalar>::advance_multi_index(idx, counts);
    }
    return out;
  }

  /// Per-point flag: true when no coordinate sits on the boundary.
  std::vector<bool> interior_mask() const {
    std::vector<bool> out(static_cast<std::size_t>(size()), true);
    std::vector<Index> idx(counts.size(), 0);
    for (Index j = 0; j < size(); ++j) {
      for (std::size_t k = 0; k < counts.size(); ++k) {
        if (idx[k] == 0 || idx[k] == counts[k] - 1) out[static_cast<std::size_t>(j)] = false;
      }
      MultiCoupling<Scalar>::advance_multi_index(idx, counts);
    }
    return out;
  }
};

/// One sampled simplex: atoms as columns, weights lambdas, barycenter sum lambda_i x_i.
template <typename Scalar>
struct SimplexSample {
  MatrixX<Scalar> atoms;
  VectorX<Scalar> lambdas;
  Point<Scalar> barycenter;
};

/// Witness of a violated simplex inequality (base is set for triangle-inequality checks).
template <typename Scalar>
struct SimplexWitness {
  std::optional<Point<Scalar>> base;
  MatrixX<Scalar> atoms;
  VectorX<Scalar> lambdas;
  Scalar violation;
  Index sample_index;
};

/// Outcome of a sampled check. max_violation is the largest signed LHS - RHS seen, max_abs_gap
/// the largest |LHS - RHS|; sampling stops at the first witness.
template <typename Scalar>
struct SimplexReport {
  bool ok = true;
  std::optional<SimplexWitness<Scalar>> witness;
  Index samples = 0;
  Scalar max_violation = -std::numeric_limits<Scalar>::infinity();
  Scalar max_abs_gap = 0;
};

inline constexpr double kSimplexTol = 1e-8;

namespace detail {

/// Generator for sample index i, seeded from (seed, i) so any subset can be replayed.
inline std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

template <typename Scalar>
Point<Scalar> uniform_in_box(std::mt19937_64& rng, const VectorX<Scalar>& lo, const VectorX<Scalar>& hi) {
  Point<Scalar> p(lo.size());
  for (Index k = 0; k < lo.size(); ++k) {
    p(k) = static_cast<Scalar>(std::uniform_real_distribution<double>(static_cast<double>(lo(k)), static_cast<double>(hi(k)))(rng));
  }
  return p;
}

/// Flat Dirichlet weights from normalized exponentials.
template <typename Scalar>
VectorX<Scalar> flat_dirichlet(std::mt19937_64& rng, Index k) {
  VectorX<Scalar> w(k);
  std::exponential_distribution<double> e(1.0);
  for (Index i = 0; i < k; ++i) w(i) = static_cast<Scalar>(e(rng));
  return w / w.sum();
}

/// dim + 1 atoms uniform in the box with flat Dirichlet weights.
template <typename Scalar>
SimplexSample<Scalar> box_simplex(std::mt19937_64& rng, const Domain<Scalar>& dom) {
  const Index d = dom.dim();
  SimplexSample<Scalar> s;
  s.atoms.resize(d, d + 1);
  for (Index i = 0; i <= d; ++i) s.atoms.col(i) = uniform_in_box(rng, dom.lo, dom.hi);
  s.lambdas = flat_dirichlet<Scalar>(rng, d + 1);
  s.barycenter = s.atoms * s.lambdas;
  return s;
}

/// Finite-set simplex: a barycenter drawn from the set and dim + 1 atoms from the set whose
/// barycentric coordinates for it are nonnegative. nullopt when the draw is rejected.
template <typename Scalar>
std::optional<SimplexSample<Scalar>> finite_simplex(std::mt19937_64& rng, const Domain<Scalar>& dom) {
  const Index d = dom.dim(), n = dom.points.cols();
  std::uniform_int_distribution<Index> pick(0, n - 1);
  SimplexSample<Scalar> s;
  s.barycenter = dom.points.col(pick(rng));
  s.atoms.resize(d, d + 1);
  for (Index i = 0; i <= d; ++i) s.atoms.col(i) = dom.points.col(pick(rng));
  MatrixX<Scalar> lifted(d + 1, d + 1);
  lifted.topRows(d) = s.atoms;
  lifted.row(d).setOnes();
  VectorX<Scalar> rhs(d + 1);
  rhs << s.barycenter, Scalar(1);
  Eigen::FullPivLU<MatrixX<Scalar>> lu(lifted);
  if (!lu.isInvertible()) return std::nullopt;
  s.lambdas = lu.solve(rhs);
  if ((s.lambdas.array() < Scalar(0)).any()) return std::nullopt;
  s.lambdas = s.lambdas.cwiseMax(Scalar(0));
  s.lambdas /= s.lambdas.sum();
  return s;
}

/// Draws sample i in either mode; nullopt on a rejected finite-set draw.
template <typename Scalar>
std::optional<SimplexSample<Scalar>> draw(std::uint64_t seed, std::uint64_t i, const Domain<Scalar>& dom,
                                          std::optional<Point<Scalar>>* base = nullptr) {
  auto rng = sample_rng(seed, i);
  std::optional<SimplexSample<Scalar>> s;
  if (dom.kind == Domain<Scalar>::Kind::Box) {
    s = box_simplex(rng, dom);
  } else {
    s = finite_simplex(rng, dom);
  }
  if (s && base) {
    *base = dom.kind == Domain<Scalar>::Kind::Box
                ? uniform_in_box(rng, dom.lo, dom.hi)
                : Point<Scalar>(dom.points.col(std::uniform_int_distribution<Index>(0, dom.points.cols() - 1)(rng)));
  }
  return s;
}

/// Runs gap(sample, base) over n_samples draws (50 x n_samples attempts for finite sets).
template <typename Scalar, typename Gap>
SimplexReport<Scalar> run_simplex_samples(const Domain<Scalar>& dom, Index n_samples, std::uint64_t seed, Scalar tol,
                                          bool with_base, Gap gap) {
  SimplexReport<Scalar> rep;
  const std::uint64_t max_attempts =
      dom.kind == Domain<Scalar>::Kind::Box ? static_cast<std::uint64_t>(n_samples) : 50ull * static_cast<std::uint64_t>(n_samples);
  for (std::uint64_t i = 0; i < max_attempts && rep.samples < n_samples; ++i) {
    std::optional<Point<Scalar>> base;
    const auto s = draw(seed, i, dom, with_base ? &base : nullptr);
    if (!s) continue;
    ++rep.samples;
    const Scalar g = gap(*s, base);
    rep.max_violation = std::max(rep.max_violation, g);
    rep.max_abs_gap = std::max(rep.max_abs_gap, std::abs(g));
    if (g > tol) {
      rep.ok = false;
      rep.witness = SimplexWitness<Scalar>{base, s->atoms, s->lambdas, g, static_cast<Index>(i)};
      break;
    }
  }
  return rep;
}

}  // namespace detail

}  // namespace choquet
