#include <doctest.h>

#include "choquet/mti.hpp"

using namespace choquet;

namespace {

CostSpecd quartic() { return CostSpecd::conical({1.0, 1.0}, {CostSpecd::sq_euclidean(), CostSpecd::power(4)}); }
CostSpecd neg_euclidean() { return CostSpecd::scaled(-1.0, CostSpecd::euclidean()); }

const auto kBox1 = Domain<double>::interval(-2, 2);
const auto kBox2 = Domain<double>::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));

}  // namespace

TEST_CASE("metrics satisfy the triangle inequality") {
  for (const auto& dom : {kBox1, kBox2}) {
    CHECK(mti_check(CostSpecd::euclidean(), dom, 10000, 1).ok);
    CHECK(mti_check(CostSpecd::truncated_euclidean(0.8), dom, 10000, 2).ok);
    CHECK(mti_check(CostSpecd::manhattan(), dom, 10000, 3).ok);
  }
}

TEST_CASE("squared distance gives equality") {
  for (const auto& dom : {kBox1, kBox2}) {
    const auto r = mti_check(CostSpecd::sq_euclidean(), dom, 10000, 4);
    CHECK(r.ok);
    CHECK(r.max_abs_gap <= 1e-9);
  }
}

TEST_CASE("negative distance at the hand-computed tuple") {
  const Eigen::MatrixXd atoms = points_1d<double>({-1, 1});
  const Eigen::Vector2d lambdas(0.5, 0.5);
  const auto c = neg_euclidean();
  // LHS = 1/2 (-3) + 1/2 (-1) - (-2) = 0, RHS = -1.
  CHECK(mti_gap<double>(c, Eigen::VectorXd::Constant(1, 2.0), atoms, lambdas) == doctest::Approx(1.0));
  const auto r = mti_check(c, kBox1, 10000, 5);
  REQUIRE_FALSE(r.ok);
  REQUIRE(r.witness);
  REQUIRE(r.witness->base);
  CHECK(mti_gap<double>(c, *r.witness->base, r.witness->atoms, r.witness->lambdas) == doctest::Approx(r.witness->violation));
}

TEST_CASE("quartic cost fails both checks") {
  const auto q = quartic();
  const auto r = mti_check(q, kBox1, 100000, 6);
  REQUIRE_FALSE(r.ok);
  CHECK(r.witness->violation > 1e-8);

  const auto h = mti_second_order_check(q, BoxGrid<double>::cube(1, -1, 1, 9), 1e-3);
  REQUIRE_FALSE(h.ok);
  // Closed form: D2c(x, y) = 2 + 12 (x - y)^2 against 2 on the diagonal.
  const double dx = (*h.x)(0) - (*h.y)(0);
  CHECK(h.min_eigenvalue == doctest::Approx(-12 * dx * dx).epsilon(1e-4));
  CHECK(h.min_eigenvalue < -h.tol);
}

TEST_CASE("finite-difference Hessian against closed forms") {
  const auto q = quartic();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3), y = Eigen::VectorXd::Constant(1, -0.2);
  const auto H = second_argument_hessian<double>(q, x, y, 1e-3);
  CHECK(H(0, 0) == doctest::Approx(2 + 12 * 0.25).epsilon(1e-6));
  const auto S = second_argument_hessian<double>(CostSpecd::sq_euclidean(), Eigen::Vector2d(0.1, 0.4), Eigen::Vector2d(-0.3, 0.2), 1e-3);
  CHECK((S - 2 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("second-order check passes smooth costs with equal Hessians") {
  const auto grid = BoxGrid<double>::cube(2, -1, 1, 6);
  const auto sq = mti_second_order_check(CostSpecd::sq_euclidean(), grid);
  CHECK(sq.ok);
  CHECK(sq.pairs == 16 * 35);
  CHECK(mti_second_order_check(CostSpecd::linear(Eigen::Vector2d(1, -2)), grid).ok);
  try {
    mti_second_order_check(CostSpecd::sq_euclidean(), BoxGrid<double>::cube(1, 0, 1, 4));
    FAIL("expected GridTooCoarse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridTooCoarse);
  }
}

TEST_CASE("conical combinations of passing costs pass") {
  const auto c = CostSpecd::conical({0.5, 2.0, 1.0},
                                    {CostSpecd::euclidean(), CostSpecd::sq_euclidean(), CostSpecd::truncated_euclidean(0.3)});
  CHECK(mti_check(c, kBox2, 10000, 8).ok);
}

TEST_CASE("finite-domain base points") {
  const auto dom = Domain<double>::finite(points_1d<double>({-1, -0.5, 0, 0.5, 1}));
  const auto r = mti_check(CostSpecd::euclidean(), dom, 2000, 9);
  CHECK(r.ok);
  CHECK(r.samples == 2000);
}
