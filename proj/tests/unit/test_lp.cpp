#include <doctest.h>

#include <cstring>
#include <sstream>

#include "choquet/lp.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace choquet;

namespace {

LinearProgramd one_var(Sense s) {
  LinearProgramd lp(1, s);
  lp.objective << 1.0;
  return lp;
}

Eigen::VectorXd row(std::initializer_list<double> xs) {
  return vector_from(std::vector<double>(xs));
}

}  // namespace

TEST_CASE("maximize x subject to x <= 1") {
  auto lp = one_var(Sense::Maximize);
  lp.add_constraint(row({1}), Relation::LessEqual, 1);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.value == doctest::Approx(1.0));
  CHECK(sol.primal(0) == doctest::Approx(1.0));
  CHECK(sol.dual(0) == doctest::Approx(1.0));
}

TEST_CASE("infeasible program returns a Farkas certificate") {
  auto lp = one_var(Sense::Maximize);
  lp.add_constraint(row({1}), Relation::LessEqual, -1);
  const auto sol = solve(lp);
  REQUIRE(sol.status == LpStatus::Infeasible);
  REQUIRE(sol.farkas.size() == 1);
  // z <= 0 on a <= row, A^T z <= 0 for x >= 0, b^T z > 0.
  CHECK(sol.farkas(0) < 0);
  CHECK(lp.A(0, 0) * sol.farkas(0) <= 1e-12);
  CHECK(lp.rhs(0) * sol.farkas(0) > 0);
}

TEST_CASE("unbounded program returns an improving ray") {
  auto lp = one_var(Sense::Maximize);
  lp.add_constraint(row({1}), Relation::GreaterEqual, 1);
  const auto sol = solve(lp);
  REQUIRE(sol.status == LpStatus::Unbounded);
  CHECK(sol.ray(0) > 0);
}

TEST_CASE("two-by-two transport program") {
  // Variables pi_00, pi_01, pi_10, pi_11 on ({0,2}, {1,3}) with |x - y|.
  LinearProgramd lp(4);
  lp.objective << 1, 3, 1, 1;
  lp.add_constraint(row({1, 1, 0, 0}), Relation::Equal, 0.5);
  lp.add_constraint(row({0, 0, 1, 1}), Relation::Equal, 0.5);
  lp.add_constraint(row({1, 0, 1, 0}), Relation::Equal, 0.5);
  lp.add_constraint(row({0, 1, 0, 1}), Relation::Equal, 0.5);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  Eigen::Matrix2d c;
  c << 1, 3, 1, 1;
  const double oracle_value = oracle::transport_2x2({0.5, 0.5}, {0.5, 0.5}, c);
  CHECK(oracle_value == doctest::Approx(1.0));
  CHECK(sol.value == doctest::Approx(oracle_value).epsilon(1e-12));
  CHECK(lp.rhs.dot(sol.dual) == doctest::Approx(sol.value));
}

TEST_CASE("feasibility mode") {
  SUBCASE("x = 1") {
    const auto r = check_feasibility<double>(Eigen::MatrixXd::Ones(1, 1), {Relation::Equal}, row({1}),
                                             {VarBound::NonNegative});
    REQUIRE(r.feasible);
    CHECK(r.point(0) == doctest::Approx(1.0));
  }
  SUBCASE("x <= 0 and x >= 1") {
    Eigen::MatrixXd A(2, 1);
    A << 1, 1;
    const auto r = check_feasibility<double>(A, {Relation::LessEqual, Relation::GreaterEqual}, row({0, 1}),
                                             {VarBound::Free});
    REQUIRE_FALSE(r.feasible);
    const Eigen::VectorXd& z = r.certificate;
    CHECK(z(0) <= 0);
    CHECK(z(1) >= 0);
    CHECK(std::abs((A.transpose() * z)(0)) <= 1e-12);  // free column
    CHECK(row({0, 1}).dot(z) > 0);
  }
}

TEST_CASE("free variables and redundant equality rows") {
  LinearProgramd lp(2);
  lp.bounds = {VarBound::Free, VarBound::Free};
  lp.objective << 1, 1;
  lp.add_constraint(row({1, -1}), Relation::Equal, 0);
  lp.add_constraint(row({2, -2}), Relation::Equal, 0);
  lp.add_constraint(row({1, 0}), Relation::GreaterEqual, -3);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.value == doctest::Approx(-6.0));
  const auto res = residuals(lp, sol);
  CHECK(res.primal <= 1e-9);
  CHECK(res.dual <= 1e-9);
  CHECK(res.gap <= 1e-9);
}

TEST_CASE("random programs agree with vertex enumeration") {
  gen::Rng rng(20240611);
  int optimal = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto lp = gen::random_lp(rng, 6, 6, trial % 3 == 0);
    const auto sol = solve(lp);
    const auto ref = oracle::vertex_enumeration(lp);
    CAPTURE(trial);
    REQUIRE(to_string(sol.status) == std::string(to_string(ref.status)));
    if (sol.optimal()) {
      ++optimal;
      CHECK(std::abs(sol.value - ref.value) <= 1e-7);
      const auto res = residuals(lp, sol);
      CHECK(res.primal <= 1e-8);
      CHECK(res.dual <= 1e-8);
      CHECK(res.complementarity <= 1e-8);
      CHECK(res.gap <= 1e-8 * (1 + std::abs(sol.value)));
    } else if (sol.status == LpStatus::Infeasible) {
      // Certificate: sign pattern, A^T z <= 0, b^T z > 0.
      const Eigen::VectorXd& z = sol.farkas;
      for (Index i = 0; i < lp.num_constraints(); ++i) {
        if (lp.relations[static_cast<std::size_t>(i)] == Relation::LessEqual) CHECK(z(i) <= 1e-12);
        if (lp.relations[static_cast<std::size_t>(i)] == Relation::GreaterEqual) CHECK(z(i) >= -1e-12);
      }
      CHECK((lp.A.transpose() * z).maxCoeff() <= 1e-9);
      CHECK(lp.rhs.dot(z) > 1e-9);
    }
  }
  CHECK(optimal >= 30);
}

TEST_CASE("strong duality on random programs with 8 variables and 8 rows") {
  gen::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto lp = gen::random_lp(rng, 8, 8, true);
    const auto sol = solve(lp);
    if (!sol.optimal()) continue;
    CAPTURE(trial);
    CHECK(std::abs(lp.objective.dot(sol.primal) - lp.rhs.dot(sol.dual)) <= 1e-8 * (1 + std::abs(sol.value)));
  }
}

TEST_CASE("solve is deterministic") {
  gen::Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lp = gen::random_lp(rng);
    const auto a = solve(lp);
    const auto b = solve(lp);
    REQUIRE(a.status == b.status);
    if (a.optimal()) {
      CHECK(a.primal.size() == b.primal.size());
      CHECK(std::memcmp(a.primal.data(), b.primal.data(), sizeof(double) * a.primal.size()) == 0);
    }
  }
}

TEST_CASE("extended precision scalar") {
  LinearProgram<long double> lp(2, Sense::Maximize);
  lp.objective << 3.0L, 2.0L;
  VectorX<long double> r(2);
  r << 1.0L, 1.0L;
  lp.add_constraint(r, Relation::LessEqual, 4.0L);
  r << 1.0L, 3.0L;
  lp.add_constraint(r, Relation::LessEqual, 6.0L);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(static_cast<double>(sol.value) == doctest::Approx(12.0));
}

TEST_CASE("tableau trace is written when verbose") {
  auto lp = one_var(Sense::Maximize);
  lp.add_constraint(row({1}), Relation::LessEqual, 1);
  std::ostringstream out;
  SolverConfig cfg;
  cfg.verbosity = 1;
  cfg.trace = &out;
  solve(lp, cfg);
  CHECK(out.str().find("pivot") != std::string::npos);
}

TEST_CASE("malformed program is rejected") {
  LinearProgramd lp(2);
  lp.A = Eigen::MatrixXd::Zero(1, 3);
  lp.rhs = Eigen::VectorXd::Zero(1);
  lp.relations = {Relation::Equal};
  CHECK_THROWS_AS(solve(lp), Error);
}

TEST_CASE("degenerate equality systems with redundant rows stay primal feasible") {
  // Transport rows with barycenter rows: one row is always redundant and many bases are degenerate.
  gen::Rng rng(606);
  for (int t = 0; t < 200; ++t) {
    const auto [mu, nu] = gen::convex_order_pair(rng, gen::integer(rng, 1, 3), 10);
    const Index m = mu.size(), n = nu.size(), d = mu.dim();
    LinearProgramd lp(m * n);
    lp.resize_constraints(m + n + m * d);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        lp.A(i, i * n + j) = 1;
        lp.A(m + j, i * n + j) = 1;
        for (Index k = 0; k < d; ++k) lp.A(m + n + i * d + k, i * n + j) = nu.point(j)(k) - mu.point(i)(k);
      }
      lp.set_constraint(i, Relation::Equal, mu.weight(i));
    }
    for (Index j = 0; j < n; ++j) lp.set_constraint(m + j, Relation::Equal, nu.weight(j));
    for (Index r = m + n; r < lp.num_constraints(); ++r) lp.set_constraint(r, Relation::Equal, 0);
    const auto sol = solve(lp);
    CAPTURE(t);
    REQUIRE(sol.optimal());
    CHECK((lp.A * sol.primal - lp.rhs).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(sol.primal.minCoeff() >= -1e-10);
  }
}
