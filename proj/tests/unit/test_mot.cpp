#include <doctest.h>

#include "choquet/mot.hpp"
#include "support/generators.hpp"

using namespace choquet;

namespace {

DiscreteMeasured m1(std::vector<double> xs, std::vector<double> ws) {
  return DiscreteMeasured(points_1d(xs), vector_from(ws));
}

const auto kDirac = m1({0}, {1});
const auto kPair = m1({-1, 1}, {0.5, 0.5});
const auto kSpread = m1({-2, 0, 2}, {0.25, 0.5, 0.25});

/// Uniform measure on the points of {-1, -1 + step, ..., 1} lying in [lo, hi].
DiscreteMeasured grid_uniform(double step, double lo, double hi) {
  std::vector<double> xs;
  const int n = static_cast<int>(std::lround(2.0 / step));
  for (int i = 0; i <= n; ++i) {
    const double x = -1.0 + i * step;
    if (x >= lo - 1e-12 && x <= hi + 1e-12) xs.push_back(x);
  }
  return DiscreteMeasured::uniform(points_1d(xs));
}

}  // namespace

TEST_CASE("martingale transport examples") {
  const auto e = CostSpecd::euclidean();
  CHECK(mot_primal(kDirac, kPair, e).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mot_dual(kDirac, kPair, e).value == doctest::Approx(1.0).epsilon(1e-12));

  const auto spread = mot_primal(kPair, kSpread, e);
  CHECK(std::abs(spread.value - 1.0) <= 1e-9);
  CHECK(std::abs(mot_dual(kPair, kSpread, e).value - 1.0) <= 1e-9);

  CHECK(std::abs(mot_primal(kSpread, kSpread, CostSpecd::sq_euclidean()).value) <= 1e-12);
  CHECK(std::abs(mot_dual(kSpread, kSpread, CostSpecd::sq_euclidean()).value) <= 1e-12);
}

TEST_CASE("dual from the hand-derived feasible point") {
  // u(0) = 1, v = 0, gamma = 0 is feasible for (delta_0, two-point, |x - y|) and attains 1.
  GammaDual<double> g{SampledFunctiond(kDirac.points(), vector_from<double>({1})),
                      SampledFunctiond(kPair.points(), vector_from<double>({0, 0})), Eigen::MatrixXd::Zero(1, 1)};
  CHECK(mot_dual_violation(g, CostSpecd::euclidean()) <= 1e-15);
  const auto r = mot_dual(kDirac, kPair, CostSpecd::euclidean());
  CHECK(mot_dual_violation(r.dual, CostSpecd::euclidean()) <= 1e-9);
  CHECK(integrate(r.dual.u, kDirac) - integrate(r.dual.v, kPair) == doctest::Approx(r.value));
}

TEST_CASE("symmetric dual examples") {
  const auto e = CostSpecd::euclidean();
  const auto s = mot_dual_symmetric(kDirac, kPair, e);
  CHECK(std::abs(s.value - 1.0) <= 1e-9);
  CHECK(symmetric_dual_violation(s.dual, e) <= 1e-9);
  // f(0) - f(+-1) = 1 on the tight constraints.
  CHECK(s.dual.f.at(Eigen::VectorXd::Zero(1)) - s.dual.f.at(Eigen::VectorXd::Ones(1)) == doctest::Approx(1.0));

  CHECK(std::abs(mot_dual_symmetric(kSpread, kSpread, e).value) <= 1e-12);

  const auto q = CostSpecd::sq_euclidean();
  const double sym = mot_dual_symmetric(kPair, kSpread, q).value;
  const double gen_value = mot_dual(kPair, kSpread, q).value;
  CHECK(sym <= gen_value + 1e-9);
}

TEST_CASE("symmetric dual rejects costs with a nonzero diagonal") {
  const auto c = CostSpecd::conical({1.0}, {CostSpecd::euclidean()});
  CHECK_NOTHROW(mot_dual_symmetric(kDirac, kPair, c));
  const auto shifted = [](const PointRef<double>& x, const PointRef<double>& y) { return (x - y).norm() + 1.0; };
  try {
    mot_dual_symmetric(kDirac, kPair, shifted);
    FAIL("expected NonVanishingDiagonal");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NonVanishingDiagonal);
  }
}

TEST_CASE("pairs out of convex order are rejected") {
  const auto e = CostSpecd::euclidean();
  for (auto run : {0, 1, 2}) {
    try {
      if (run == 0) mot_primal(kPair, kDirac, e);
      if (run == 1) mot_dual(kPair, kDirac, e);
      if (run == 2) mot_dual_symmetric(kPair, kDirac, e);
      FAIL("expected NotInConvexOrder");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::NotInConvexOrder);
    }
  }
}

TEST_CASE("martingale strong duality and the symmetric inequality on random instances") {
  gen::Rng rng(808);
  const std::vector<CostSpecd> costs = {CostSpecd::euclidean(), CostSpecd::sq_euclidean(), CostSpecd::manhattan()};
  for (int t = 0; t < 30; ++t) {
    const Index dim = gen::integer(rng, 1, 2);
    const auto [mu, nu] = gen::convex_order_pair(rng, dim, 8);
    const auto& cost = costs[static_cast<std::size_t>(t % 3)];
    CAPTURE(t);
    const auto primal = mot_primal(mu, nu, cost);
    const auto dual = mot_dual(mu, nu, cost);
    CHECK(std::abs(primal.value - dual.value) <= 1e-7 * (1 + std::abs(primal.value)));
    CHECK(mot_dual_violation(dual.dual, cost) <= 1e-9);
    CHECK((barycenter_residuals(primal.coupling).array() <= 1e-9).all());
    CHECK(std::abs(primal.value - coupling_cost(primal.coupling, cost_matrix<double>(cost, mu.points(), nu.points()))) <=
          1e-12);

    const auto sym = mot_dual_symmetric(mu, nu, cost);
    CHECK(sym.value <= dual.value + 1e-9);
    CHECK(symmetric_dual_violation(sym.dual, cost) <= 1e-9);
    // The symmetric potential is a feasible (u, v, gamma) after restriction.
    GammaDual<double> restricted{SampledFunctiond(mu.points(), Eigen::VectorXd(mu.size())),
                                 SampledFunctiond(nu.points(), Eigen::VectorXd(nu.size())),
                                 Eigen::MatrixXd(dim, mu.size())};
    for (Index i = 0; i < mu.size(); ++i) {
      const auto k = *sym.dual.f.find(mu.point(i));
      restricted.u.values()(i) = sym.dual.f.value(k);
      restricted.gamma.col(i) = sym.dual.gamma.col(k);
    }
    for (Index j = 0; j < nu.size(); ++j) restricted.v.values()(j) = sym.dual.f.at(nu.point(j));
    CHECK(mot_dual_violation(restricted, cost) <= 1e-9);
  }
}

TEST_CASE("symmetric gap under grid refinement for the euclidean cost") {
  const auto e = CostSpecd::euclidean();
  std::vector<double> gaps;
  for (double step : {0.5, 0.25, 0.125}) {
    const auto mu = grid_uniform(step, -0.5, 0.5);
    const auto nu = grid_uniform(step, -1.0, 1.0);
    const double general = mot_dual(mu, nu, e).value;
    const double sym = mot_dual_symmetric(mu, nu, e).value;
    CAPTURE(step);
    CHECK(std::abs(mot_primal(mu, nu, e).value - general) <= 1e-8);
    CHECK(general - sym >= -1e-9);
    gaps.push_back(general - sym);
  }
  CHECK(gaps[1] <= gaps[0] + 1e-9);
  CHECK(gaps[2] <= gaps[1] + 1e-9);
}

TEST_CASE("symmetric gap vanishes for triangle costs and not for the cubic power") {
  gen::Rng rng(5);
  double metric_gap = 0, cubic_gap = 0;
  for (int t = 0; t < 40; ++t) {
    const auto [mu, nu] = gen::convex_order_pair(rng, 1, 8);
    const auto e = CostSpecd::euclidean();
    const auto p3 = CostSpecd::power(3);
    metric_gap = std::max(metric_gap, std::abs(mot_dual(mu, nu, e).value - mot_dual_symmetric(mu, nu, e).value));
    cubic_gap = std::max(cubic_gap, mot_dual(mu, nu, p3).value - mot_dual_symmetric(mu, nu, p3).value);
  }
  CHECK(metric_gap <= 1e-9);
  CHECK(cubic_gap > 1e-3);
}
