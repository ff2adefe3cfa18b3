#include <doctest.h>

#include "choquet/multimarginal.hpp"
#include "support/generators.hpp"

using namespace choquet;

namespace {

DiscreteMeasured m1(std::vector<double> xs, std::vector<double> ws) {
  return DiscreteMeasured(points_1d(xs), vector_from(ws));
}

const auto kPairAbs = MultiCostd::pairwise_sum(CostSpecd::euclidean());

std::vector<Eigen::MatrixXd> supports_of(const std::vector<DiscreteMeasured>& ms) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& m : ms) out.push_back(m.points());
  return out;
}

}  // namespace

TEST_CASE("multimarginal examples") {
  const std::vector<DiscreteMeasured> diracs{m1({0}, {1}), m1({1}, {1}), m1({3}, {1})};
  CHECK(multimarginal_primal(diracs, kPairAbs).value == doctest::Approx(1 + 3 + 2));
  CHECK(multimarginal_dual(diracs, kPairAbs).value == doctest::Approx(6.0));

  const auto u = m1({0, 1}, {0.5, 0.5});
  const std::vector<DiscreteMeasured> cube{u, u, u};
  CHECK(multimarginal_primal(cube, kPairAbs).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(multimarginal_dual(cube, kPairAbs).value == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<DiscreteMeasured> forced{u, m1({0}, {1}), m1({1}, {1})};
  CHECK(multimarginal_primal(forced, kPairAbs).value == doctest::Approx(2.0));
  CHECK(multimarginal_dual(forced, kPairAbs).value == doctest::Approx(2.0));
}

TEST_CASE("two marginals reproduce the Kantorovich solver") {
  gen::Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    const auto mu = gen::random_measure(rng, 2, gen::integer(rng, 1, 6));
    const auto nu = gen::random_measure(rng, 2, gen::integer(rng, 1, 6));
    const auto c = CostSpecd::sq_euclidean();
    const double two = kantorovich_primal(mu, nu, c).value;
    CHECK(std::abs(multimarginal_primal<double>({mu, nu}, MultiCostd::pairwise_sum(c)).value - two) <= 1e-8);
  }
}

TEST_CASE("multimarginal duality on random instances") {
  gen::Rng rng(13);
  for (int t = 0; t < 8; ++t) {
    const int k = 3 + t % 2;
    std::vector<DiscreteMeasured> ms;
    for (int a = 0; a < k; ++a) ms.push_back(gen::random_measure(rng, 1, gen::integer(rng, 2, k == 3 ? 6 : 4)));
    const auto cost = MultiCostd::pairwise_sum(t % 2 ? CostSpecd::euclidean() : CostSpecd::sq_euclidean());
    const auto p = multimarginal_primal(ms, cost);
    const auto d = multimarginal_dual(ms, cost);
    CAPTURE(t);
    CHECK(std::abs(p.value - d.value) <= 1e-7 * (1 + std::abs(p.value)));
    CHECK(multi_dual_violation(d.potentials, cost, supports_of(ms)) <= 1e-9);
    for (int a = 0; a < k; ++a) {
      CHECK((p.coupling.marginal_weights(static_cast<std::size_t>(a)) - ms[static_cast<std::size_t>(a)].weights())
                .cwiseAbs()
                .maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("product guard") {
  std::vector<DiscreteMeasured> ms;
  Eigen::MatrixXd pts(1, 101);
  for (int j = 0; j < 101; ++j) pts(0, j) = j;
  for (int a = 0; a < 3; ++a) ms.push_back(DiscreteMeasured::uniform(pts));
  try {
    multimarginal_primal(ms, kPairAbs);
    FAIL("expected ProductTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProductTooLarge);
  }
}

TEST_CASE("c-convexification of partial potentials") {
  const std::vector<Eigen::MatrixXd> supp{points_1d<double>({0, 1}), points_1d<double>({0, 1})};
  const std::vector<SampledFunctiond> partial{SampledFunctiond(points_1d<double>({0}), vector_from<double>({1})),
                                              SampledFunctiond(points_1d<double>({1}), vector_from<double>({0}))};
  const auto r = multi_c_convexify(partial, kPairAbs, supp);
  // Direct evaluation of the inductive infima:
  // f1(x) = |x - 1| - 0, f2(y) = min_x |x - y| - f1(x).
  CHECK(r.potentials.f[0].values()(0) == doctest::Approx(1.0));
  CHECK(r.potentials.f[0].values()(1) == doctest::Approx(0.0));
  CHECK(r.potentials.f[1].values()(0) == doctest::Approx(-1.0));
  CHECK(r.potentials.f[1].values()(1) == doctest::Approx(0.0));
  CHECK(r.residual <= 1e-9);
  CHECK(multi_dual_violation(r.potentials, kPairAbs, supp) <= 1e-12);

  const auto n = normalize_potentials(r.potentials, kPairAbs, supp);
  for (const auto& f : n.potentials.f) CHECK(f.values().cwiseAbs().maxCoeff() <= 3.0 + 1e-9);
  CHECK(std::abs(n.shifts[0] + n.shifts[1]) <= 1e-12);
}

TEST_CASE("infeasible partial potentials are rejected") {
  const std::vector<Eigen::MatrixXd> supp{points_1d<double>({0, 1}), points_1d<double>({0, 1})};
  const std::vector<SampledFunctiond> partial{SampledFunctiond(points_1d<double>({0}), vector_from<double>({2})),
                                              SampledFunctiond(points_1d<double>({1}), vector_from<double>({0}))};
  try {
    multi_c_convexify(partial, kPairAbs, supp);
    FAIL("expected InfeasibleInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleInput);
  }
}

TEST_CASE("full feasible inputs are only raised") {
  gen::Rng rng(21);
  const std::vector<Eigen::MatrixXd> supp{gen::random_measure(rng, 1, 4).points(), gen::random_measure(rng, 1, 3).points(),
                                          gen::random_measure(rng, 1, 5).points()};
  const auto cost = MultiCostd::pairwise_sum(CostSpecd::sq_euclidean());
  const ProductTable<double> t(supp, cost);
  const double M = t.cost.cwiseAbs().maxCoeff();
  std::vector<SampledFunctiond> partial;
  for (const auto& s : supp) partial.emplace_back(s, Eigen::VectorXd::Constant(s.cols(), -M / 3));
  const auto r = multi_c_convexify(partial, cost, supp);
  CHECK(multi_dual_violation(r.potentials, cost, supp) <= 1e-12);
  for (std::size_t a = 0; a < supp.size(); ++a) CHECK((r.potentials.f[a].values().array() >= -M / 3 - 1e-12).all());
}

TEST_CASE("seeded convexification and normalization") {
  gen::Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + t % 3;
    std::vector<Eigen::MatrixXd> supp;
    std::vector<DiscreteMeasured> ms;
    for (int a = 0; a < k; ++a) {
      ms.push_back(gen::random_measure(rng, 2, gen::integer(rng, 1, 5)));
      supp.push_back(ms.back().points());
    }
    const auto cost = MultiCostd::pairwise_sum(t % 2 ? CostSpecd::euclidean() : CostSpecd::sq_euclidean());
    std::vector<Index> seed;
    for (int a = 0; a < k; ++a) seed.push_back(gen::integer(rng, 0, static_cast<int>(supp[static_cast<std::size_t>(a)].cols()) - 1));
    const auto r = multi_c_convexify_seeded(seed, cost, supp);
    const ProductTable<double> table(supp, cost);
    Index flat = 0;
    double at_seed = 0;
    for (int a = 0; a < k; ++a) {
      flat += seed[static_cast<std::size_t>(a)] * table.strides[static_cast<std::size_t>(a)];
      at_seed += r.potentials.f[static_cast<std::size_t>(a)].value(seed[static_cast<std::size_t>(a)]);
    }
    CAPTURE(t);
    CHECK(std::abs(at_seed - table.cost(flat)) <= 1e-9);
    CHECK(multi_dual_violation(r.potentials, cost, supp) <= 1e-9);
    CHECK(r.residual <= 1e-9);

    const auto n = normalize_potentials(r.potentials, cost, supp);
    const double M = table.cost.cwiseAbs().maxCoeff();
    for (const auto& f : n.potentials.f) CHECK(f.values().cwiseAbs().maxCoeff() <= std::max(k, 3) * M + 1e-9);
    double hs = 0;
    for (double h : n.shifts) hs += h;
    CHECK(std::abs(hs) <= 1e-12);
    CHECK(std::abs(multi_dual_objective(n.potentials, ms) - multi_dual_objective(r.potentials, ms)) <= 1e-12 * (1 + M));
  }
}

TEST_CASE("offset potentials are brought back within the bound") {
  const std::vector<Eigen::MatrixXd> supp{points_1d<double>({0, 1}), points_1d<double>({0, 1})};
  const std::vector<SampledFunctiond> partial{SampledFunctiond(points_1d<double>({0}), vector_from<double>({1})),
                                              SampledFunctiond(points_1d<double>({1}), vector_from<double>({0}))};
  auto pots = multi_c_convexify(partial, kPairAbs, supp).potentials;
  pots.f[0].values().array() += 100;
  pots.f[1].values().array() -= 100;
  const auto n = normalize_potentials(pots, kPairAbs, supp);
  for (const auto& f : n.potentials.f) CHECK(f.values().cwiseAbs().maxCoeff() <= 3.0 + 1e-9);
  // The construction puts sup f_2 at max|c| = 1.
  CHECK(n.potentials.f[1].values().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("normalization requires a fixed point") {
  const std::vector<Eigen::MatrixXd> supp{points_1d<double>({0, 1}), points_1d<double>({0, 1})};
  MultiPotentials<double> p{{SampledFunctiond(supp[0], Eigen::VectorXd::Constant(2, -1)),
                            SampledFunctiond(supp[1], Eigen::VectorXd::Constant(2, -1))}};
  try {
    normalize_potentials(p, kPairAbs, supp);
    FAIL("expected NotAFixedPoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAFixedPoint);
  }
}
