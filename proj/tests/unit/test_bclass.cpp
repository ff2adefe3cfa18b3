#include <doctest.h>

#include "choquet/bclass.hpp"
#include "support/generators.hpp"

using namespace choquet;

namespace {

using Fd = FunctionEvaluatord;

Fd square() { return Fd::quadratic(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0); }
Fd neg_square() { return Fd::neg_quadratic(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0); }
Fd sq_norm(Index d) { return Fd::quadratic(Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d), 0); }

Eigen::MatrixXd line(double lo, double hi, int n) {
  Eigen::MatrixXd p(1, n);
  for (int i = 0; i < n; ++i) p(0, i) = lo + (hi - lo) * i / (n - 1);
  return p;
}

Eigen::VectorXd at1(double x) { return Eigen::VectorXd::Constant(1, x); }

/// Random atoms with centers in [-1, 1]^d, slopes in [-1, 1]^d and offsets in [-1, 1].
std::vector<BAtom<double>> random_atoms(gen::Rng& rng, Index d, int count) {
  std::vector<BAtom<double>> atoms;
  for (int k = 0; k < count; ++k) {
    BAtom<double> a{Eigen::VectorXd(d), Eigen::VectorXd(d), gen::uniform(rng, -1, 1)};
    for (Index i = 0; i < d; ++i) {
      a.y(i) = gen::uniform(rng, -1, 1);
      a.a(i) = gen::uniform(rng, -1, 1);
    }
    atoms.push_back(std::move(a));
  }
  return atoms;
}

}  // namespace

TEST_CASE("simplex inequality examples") {
  const auto dom = Domain<double>::interval(-1, 1);
  const auto zero = CostSpecd::zero();
  const auto jensen = simplex_inequality_check(square(), square(), zero, dom, 2000, 1);
  CHECK(jensen.ok);
  CHECK(jensen.samples == 2000);

  const auto concave = simplex_inequality_check(neg_square(), neg_square(), zero, dom, 1000, 1);
  REQUIRE_FALSE(concave.ok);
  REQUIRE(concave.witness);
  const auto& w = *concave.witness;
  CHECK(w.atoms.cols() == 2);
  CHECK(w.lambdas.sum() == doctest::Approx(1.0));
  // Recompute: -xbar^2 + sum lambda x_i^2 is the variance of the atoms.
  const double bar = w.atoms.row(0).dot(w.lambdas);
  const double var = (w.atoms.row(0).array() - bar).square().matrix().dot(w.lambdas);
  CHECK(w.violation == doctest::Approx(var).epsilon(1e-12));

  // The variance identity makes the sq_euclidean case an equality.
  const auto eq = simplex_inequality_check(neg_square(), neg_square(), CostSpecd::sq_euclidean(), dom, 2000, 1);
  CHECK(eq.ok);
  CHECK(eq.max_abs_gap <= 1e-9);
}

TEST_CASE("simplex sampling is reproducible per index") {
  const auto dom = Domain<double>::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  const auto a = simplex_inequality_check(neg_square().negated().negated(), neg_square(), CostSpecd::zero(),
                                          Domain<double>::interval(-1, 1), 500, 77);
  const auto b = simplex_inequality_check(neg_square(), neg_square(), CostSpecd::zero(), Domain<double>::interval(-1, 1), 500, 77);
  REQUIRE(a.witness);
  REQUIRE(b.witness);
  CHECK(a.witness->sample_index == b.witness->sample_index);
  CHECK(a.witness->violation == b.witness->violation);
  const auto s1 = detail::draw<double>(5, 12, dom);
  const auto s2 = detail::draw<double>(5, 12, dom);
  CHECK((s1->atoms - s2->atoms).norm() == 0.0);
  CHECK(s1->atoms.cols() == 3);
}

TEST_CASE("gamma certification examples") {
  const Eigen::MatrixXd X = points_1d<double>({-1, 0, 1});
  const auto zero = CostSpecd::zero();

  const auto fs = square().sample(X);
  const auto ok = gamma_certify(fs, fs, zero);
  REQUIRE(ok.ok);
  CHECK(ok.max_violation <= 1e-12);
  CHECK(std::abs(ok.gamma(0, 1)) <= 1e-12);
  // gamma(x) = -2x is a certificate as well.
  Eigen::MatrixXd tangent(1, 3);
  tangent << 2, 0, -2;
  CHECK(gamma_violation(fs, fs, zero, tangent) <= 1e-15);

  const auto ns = neg_square().sample(X);
  const auto bad = gamma_certify(ns, ns, zero);
  REQUIRE_FALSE(bad.ok);
  REQUIRE(bad.counterexample);
  CHECK(bad.counterexample->x(0) == 0.0);
  const auto& ce = *bad.counterexample;
  // The reported rows combine to an impossible inequality.
  double dir = 0, slack = 0;
  for (Index k = 0; k < ce.ys.cols(); ++k) {
    CHECK(ce.multipliers(k) >= 0);
    dir += ce.multipliers(k) * (ce.ys(0, k) - ce.x(0));
    slack += ce.multipliers(k) * (0.0 - ns.at(ce.x) + ns.at(ce.ys.col(k)));
  }
  CHECK(std::abs(dir) <= 1e-12);
  CHECK(slack < -1e-9);
  CHECK(slack == doctest::Approx(ce.margin));

  const auto sq = gamma_certify(ns, ns, CostSpecd::sq_euclidean());
  REQUIRE(sq.ok);
  Eigen::MatrixXd twice(1, 3);
  twice << -2, 0, 2;
  CHECK(std::abs(gamma_violation(ns, ns, CostSpecd::sq_euclidean(), twice)) <= 1e-15);
  CHECK(sq.max_violation <= 1e-9);
}

TEST_CASE("gamma certification on the diagonal row") {
  const Eigen::MatrixXd X = points_1d<double>({0, 1});
  const SampledFunctiond f1(X, vector_from<double>({1, 0}));
  const SampledFunctiond f2(X, vector_from<double>({0, 0}));
  const auto r = gamma_certify(f1, f2, CostSpecd::zero());
  REQUIRE_FALSE(r.ok);
  CHECK(r.counterexample->ys.cols() == 1);
  CHECK(r.counterexample->margin == doctest::Approx(-1.0));
}

TEST_CASE("face-restricted certification") {
  const Eigen::MatrixXd X = BoxGrid<double>::cube(2, 0, 1, 4).points();
  const auto f = sq_norm(2).sample(X);
  const auto faces = FaceRule<double>::box_faces(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  const auto r = gamma_certify(f, f, CostSpecd::zero(), faces);
  REQUIRE(r.ok);
  CHECK(r.face_rule == "box_faces");
  CHECK(gamma_violation(f, f, CostSpecd::zero(), r.gamma, faces) <= 1e-9);
  CHECK(gamma_certify(f, f, CostSpecd::zero()).face_rule == "all_points");
}

TEST_CASE("B-class generation examples") {
  const auto e = CostSpecd::euclidean();
  const auto cone = bclass_generate<double>({{at1(0), at1(0), 0.0}}, e);
  for (double x : {-1.0, -0.3, 0.0, 0.7}) CHECK(cone(at1(x)) == doctest::Approx(-std::abs(x)));
  const auto cs = cone.sample(line(-1, 1, 41));
  const auto cert = gamma_certify(cs, cs, e);
  CHECK(cert.ok);
  CHECK(cert.max_violation <= 1e-9);

  // Zero cost: atoms are affine pieces b + <a, x - y>.
  const auto pieces = bclass_generate<double>({{at1(0), at1(1), 0.0}, {at1(0), at1(-1), 0.0}}, CostSpecd::zero());
  for (double x : {-2.0, -0.5, 0.5, 3.0}) CHECK(pieces(at1(x)) == doctest::Approx(std::abs(x)));
  CHECK(simplex_inequality_check(pieces, pieces, CostSpecd::zero(), Domain<double>::interval(-2, 2), 2000, 3).ok);

  const auto five = bclass_generate<double>({{at1(0), at1(0), 5.0}}, CostSpecd::sq_euclidean());
  CHECK(five(at1(0)) == 5.0);

  try {
    bclass_generate<double>({}, e);
    FAIL("expected EmptyAtoms");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::EmptyAtoms);
  }
}

TEST_CASE("random B-class functions certify on finite sets") {
  gen::Rng rng(4242);
  const std::vector<CostSpecd> costs = {CostSpecd::euclidean(), CostSpecd::truncated_euclidean(0.7), CostSpecd::sq_euclidean()};
  for (int t = 0; t < 12; ++t) {
    const Index d = 1 + t % 2;
    const auto& cost = costs[static_cast<std::size_t>(t % 3)];
    const auto f = bclass_generate(random_atoms(rng, d, gen::integer(rng, 1, 5)), cost);
    const Eigen::MatrixXd X = BoxGrid<double>::cube(d, -1, 1, d == 1 ? 21 : 7).points();
    const auto fs = f.sample(X);
    CAPTURE(t);
    const auto cert = gamma_certify(fs, fs, cost);
    CHECK(cert.ok);
    CHECK(cert.max_violation <= 1e-8);
  }
}

TEST_CASE("certified pairs satisfy every sampled simplex inequality on their set") {
  gen::Rng rng(11);
  struct Case {
    Fd f1, f2;
    CostSpecd cost;
    Index dim;
  };
  std::vector<Case> cases = {
      {square(), square(), CostSpecd::zero(), 1},
      {neg_square(), neg_square(), CostSpecd::sq_euclidean(), 1},
      {sq_norm(2), sq_norm(2), CostSpecd::zero(), 2},
  };
  for (int t = 0; t < 4; ++t) {
    const Index d = 1 + t % 2;
    const auto cost = t < 2 ? CostSpecd::euclidean() : CostSpecd::manhattan();
    const auto f = bclass_generate(random_atoms(rng, d, 4), cost);
    // f2 = f + 0.25 keeps the pair certified.
    cases.push_back({f, Fd::custom([f](const PointRef<double>& x) { return f(x) + 0.25; }), cost, d});
  }
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    const Eigen::MatrixXd X = BoxGrid<double>::cube(c.dim, -1, 1, c.dim == 1 ? 17 : 5).points();
    const auto s1 = c.f1.sample(X);
    const auto s2 = c.f2.sample(X);
    CAPTURE(k);
    const auto cert = gamma_certify(s1, s2, c.cost);
    REQUIRE(cert.ok);
    const auto rep = simplex_inequality_check(Fd::samples(s1), Fd::samples(s2), c.cost, Domain<double>::finite(X), 10000, 900 + k);
    CHECK(rep.ok);
    CHECK(rep.samples == 10000);
  }
}

TEST_CASE("one-dimensional slope bounds hold for B-class functions") {
  gen::Rng rng(21);
  const std::vector<CostSpecd> costs = {CostSpecd::euclidean(), CostSpecd::sq_euclidean(), CostSpecd::truncated_euclidean(0.5)};
  for (int t = 0; t < 9; ++t) {
    const auto& cost = costs[static_cast<std::size_t>(t % 3)];
    const auto f = bclass_generate(random_atoms(rng, 1, gen::integer(rng, 1, 4)), cost);
    CAPTURE(t);
    REQUIRE(simplex_inequality_check(f, f, cost, Domain<double>::interval(-1, 1), 3000, t).ok);
    const auto g = f.negated().sample(line(-1, 1, 25));
    const auto rep = slope_bounds_check(g, cost);
    CHECK(rep.ok);
    CHECK(rep.triples == 2300);
  }
  // x^2 with zero cost has the opposite curvature to the hypothesis.
  const auto bad = slope_bounds_check(square().sample(line(-1, 1, 5)), CostSpecd::zero());
  CHECK_FALSE(bad.ok);
}

TEST_CASE("extension of the square beyond [-1, 1]") {
  const Eigen::MatrixXd K = line(-1, 1, 2001);
  const auto g = square().sample(K);
  const Eigen::MatrixXd gamma = -2.0 * K;
  const auto zero = CostSpecd::zero();
  REQUIRE(gamma_violation(g, g, zero, gamma) <= 1e-12);

  const auto out = extend(g, zero, gamma, points_1d<double>({2.0, -3.0, 0.5}));
  // Outside [-1, 1] the supremum over the tangents is 2|x| - 1.
  CHECK(std::abs(out.value(0) - 3.0) <= 1e-5);
  CHECK(std::abs(out.value(1) - 5.0) <= 1e-5);
  CHECK(std::abs(out.value(2) - 0.25) <= 1e-9);
  // Direct maximization over a finer set of tangent points.
  double dense = -1e300;
  for (int i = 0; i <= 200000; ++i) {
    const double y = -1.0 + i * 1e-5;
    dense = std::max(dense, y * y + 2 * y * (2.0 - y));
  }
  CHECK(std::abs(out.value(0) - dense) <= 1e-5);

  const auto back = extend(g, zero, gamma, K);
  CHECK((back.values() - g.values()).cwiseAbs().maxCoeff() <= 1e-9);

  const auto lower = Fd::quadratic(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), -0.5);
  const Eigen::MatrixXd T = line(-4, 4, 33);
  const auto plain = extend(g, zero, gamma, T);
  const auto joined = extend(g, zero, gamma, T, std::optional<Fd>(lower));
  for (Index j = 0; j < T.cols(); ++j) {
    CHECK(joined.value(j) == std::max(plain.value(j), lower(T.col(j))));
    CHECK(joined.value(j) >= lower(T.col(j)));
  }
}

TEST_CASE("extension with a certified gamma field") {
  const Eigen::MatrixXd K = line(-1, 1, 201);
  const auto g = square().sample(K);
  const auto cert = gamma_certify(g, g, CostSpecd::zero());
  REQUIRE(cert.ok);
  const auto back = extend(g, CostSpecd::zero(), cert.gamma, K);
  CHECK((back.values() - g.values()).cwiseAbs().maxCoeff() <= 1e-9);
  // The boundary slope is fixed only up to one grid step.
  const double v = extend(g, CostSpecd::zero(), cert.gamma, points_1d<double>({2.0})).value(0);
  CHECK(v <= 3.0 + 1e-9);
  CHECK(v >= 3.0 - 0.01 - 1e-9);
}

TEST_CASE("extension errors") {
  const Eigen::MatrixXd K = line(-1, 1, 5);
  const auto g = square().sample(K);
  try {
    extend(g, CostSpecd::zero(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 4)), K);
    FAIL("expected GammaMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GammaMissing);
  }
  const auto high = Fd::quadratic(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0.1);
  try {
    extend(g, CostSpecd::zero(), Eigen::MatrixXd(-2.0 * K), K, std::optional<Fd>(high));
    FAIL("expected LowerBoundViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LowerBoundViolation);
  }
}

TEST_CASE("extensions stay in the class for metric costs") {
  gen::Rng rng(5);
  for (int t = 0; t < 6; ++t) {
    const auto cost = t % 2 ? CostSpecd::euclidean() : CostSpecd::truncated_euclidean(0.4);
    const auto f = bclass_generate(random_atoms(rng, 1, 3), cost);
    const Eigen::MatrixXd K = line(-1, 1, 21);
    const auto g = f.sample(K);
    const auto cert = gamma_certify(g, g, cost);
    REQUIRE(cert.ok);
    const Eigen::MatrixXd T = points_1d<double>({-2.0, -1.5, -1.25, 1.2, 1.7, 2.0});
    const auto ext = extend(g, cost, cert.gamma, T);
    Eigen::MatrixXd all(1, K.cols() + T.cols());
    all << K, T;
    Eigen::VectorXd vals(all.cols());
    vals << g.values(), ext.values();
    const auto joined = Fd::samples(SampledFunctiond(all, vals));
    CAPTURE(t);
    const auto rep = simplex_inequality_check(joined, joined, cost, Domain<double>::finite(all), 5000, t);
    CHECK(rep.ok);
    CHECK(extend(g, cost, cert.gamma, K).values().isApprox(g.values(), 1e-12));
  }
}

TEST_CASE("uniform convexity certification") {
  const auto sigma = ModulusSpecd::power(2);
  for (Index d = 1; d <= 3; ++d) {
    const Eigen::MatrixXd grid = BoxGrid<double>::cube(d, -1, 1, d == 1 ? 21 : d == 2 ? 7 : 4).points();
    const auto r = uniform_convexity_certify(sq_norm(d), sigma, grid);
    CAPTURE(d);
    REQUIRE(r.ok);
    // Equality case: gamma(x) = 2x is the unique certificate at interior points.
    for (Index j = 0; j < grid.cols(); ++j) {
      if ((grid.col(j).array().abs() < 1 - 1e-12).all()) CHECK((r.gamma.col(j) - 2 * grid.col(j)).norm() <= 1e-8);
    }
  }

  const Eigen::MatrixXd grid = line(-1, 1, 21);
  const auto bad = uniform_convexity_certify(Fd::abs_norm(), sigma, grid);
  REQUIRE_FALSE(bad.ok);
  const auto& ce = *bad.counterexample;
  CHECK(std::abs(ce.x(0)) < 1.0);
  REQUIRE(ce.ys.cols() == 2);
  CHECK((ce.ys(0, 0) - ce.x(0)) * (ce.ys(0, 1) - ce.x(0)) < 0);

  // x = 1/2, y = 1/2 +- 0.1: gamma >= 1 + 0.1 and gamma <= 1 - 0.1.
  const auto f = Fd::abs_norm();
  const auto row = [&](double x, double y) { return (f(at1(y)) - f(at1(x)) - 0.01) / (y - x); };
  CHECK(row(0.5, 0.6) == doctest::Approx(0.9));
  CHECK(row(0.5, 0.4) == doctest::Approx(1.1));

  Eigen::MatrixXd slopes(1, 3);
  slopes << -1, 0.5, 2;
  CHECK(uniform_convexity_certify(Fd::max_affine(slopes, Eigen::Vector3d(0, 0.1, -1)), ModulusSpecd::zero(), grid).ok);
}

TEST_CASE("uniform smoothness certification") {
  const auto sigma = ModulusSpecd::power(2);
  const Eigen::MatrixXd grid = BoxGrid<double>::cube(2, -1, 1, 6).points();
  CHECK(uniform_smoothness_certify(Fd::neg_quadratic(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0), sigma, grid).ok);
  CHECK_FALSE(uniform_smoothness_certify(sq_norm(2), ModulusSpecd::zero(), grid).ok);
  Eigen::MatrixXd slope(2, 1);
  slope << 0.5, -1.5;
  const auto affine = uniform_smoothness_certify(Fd::max_affine(slope, Eigen::VectorXd::Constant(1, 0.3)), ModulusSpecd::zero(), grid);
  REQUIRE(affine.ok);
  // Interior points pin gamma to the slope; boundary points admit the normal cone as well.
  for (Index j = 0; j < grid.cols(); ++j) {
    if ((grid.col(j).array().abs() < 1 - 1e-12).all()) CHECK((affine.gamma.col(j) - slope.col(0)).norm() <= 1e-8);
  }
  CHECK(affine.max_violation <= 1e-9);
}

TEST_CASE("modulus kinds and validation") {
  const auto c = ModulusSpecd::custom({0, 1, 2}, {0, 1, 4});
  CHECK(c(0.5) == doctest::Approx(0.5));
  CHECK(c(1.5) == doctest::Approx(2.5));
  CHECK(*c.growth(2) == doctest::Approx(2.0));
  CHECK(*ModulusSpecd::power(2, 3).growth(2) == doctest::Approx(6.0));
  CHECK_FALSE(ModulusSpecd::power(0.5).growth(1));
  CHECK_THROWS_AS(ModulusSpecd::custom({0, 1}, {0.1, 1}), Error);
  CHECK_THROWS_AS(c(3.0), Error);
  CHECK_THROWS_AS(uniform_convexity_certify(sq_norm(1), ModulusSpecd::power(0.5), line(-1, 1, 5)), Error);
}
