#include "choquet/cli.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "choquet/choquet.hpp"
#include "choquet/io.hpp"

#ifndef CHOQUET_VERSION
#define CHOQUET_VERSION "0.0.0"
#endif

namespace choquet::cli {

const char* tool_version() { return CHOQUET_VERSION; }

namespace {

using io::json;

struct Args {
  std::optional<double> tol;
  std::uint64_t seed = 0;
  Index samples = 10000;
  std::string out;
  std::string format = "json";

  std::string mu, nu, cost, multicost, f1, f2, f, g, domain, grid, points, ypoints, gamma, targets, lower, atoms, sigma;
  std::string faces = "all";
  std::vector<std::string> measures;
  std::vector<Index> seed_point;
  double h = 1e-3;
};

/// Flat table for grid-sampled outputs.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct Outcome {
  json inputs = json::object();
  json results = json::object();
  int code = kSuccess;
  std::optional<Table> table;
};

using Handler = std::function<Outcome(const Args&)>;

const std::string& required(const std::string& value, const std::string& flag) {
  if (value.empty()) throw io::InputError(ErrorCode::InvalidInput, io::Diagnostic{flag, "", "option is required"});
  return value;
}

io::Document doc(const std::string& value, const std::string& flag) { return io::load(required(value, flag), flag); }

double tol_or(const Args& a, double fallback) { return a.tol.value_or(fallback); }

std::pair<DiscreteMeasured, DiscreteMeasured> measure_pair(const Args& a, Outcome& o) {
  const auto dmu = doc(a.mu, "--mu");
  const auto dnu = doc(a.nu, "--nu");
  auto mu = io::parse_measure(dmu);
  auto nu = io::parse_measure(dnu);
  if (mu.dim() != nu.dim()) {
    throw io::InputError(ErrorCode::DimensionMismatch,
                         io::Diagnostic{dmu.source + " and " + dnu.source, "/dim",
                                        "dimensions differ (" + std::to_string(mu.dim()) + " vs " + std::to_string(nu.dim()) + ")"});
  }
  o.inputs["mu"] = io::to_json(mu);
  o.inputs["nu"] = io::to_json(nu);
  return {std::move(mu), std::move(nu)};
}

CostSpecd cost_input(const Args& a, Outcome& o) {
  auto c = io::parse_cost(doc(a.cost, "--cost"));
  o.inputs["cost"] = io::to_json(c);
  return c;
}

FunctionEvaluatord evaluator_input(const std::string& value, const std::string& flag, const std::string& key, Outcome& o) {
  auto f = io::parse_evaluator(doc(value, flag));
  o.inputs[key] = io::to_json(f);
  return f;
}

Eigen::MatrixXd points_input(const std::string& value, const std::string& flag, const std::string& key, Outcome& o) {
  Eigen::MatrixXd p = io::parse_point_set(doc(value, flag));
  o.inputs[key] = io::columns_json(p);
  return p;
}

double max_or_zero(const Eigen::VectorXd& v) { return v.size() ? v.maxCoeff() : 0.0; }

/// Table with point coordinates followed by value columns.
Table point_table(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& values, const std::string& prefix) {
  Table t;
  for (Index k = 0; k < pts.rows(); ++k) t.header.push_back("x" + std::to_string(k));
  if (values.rows() == 1) {
    t.header.push_back(prefix);
  } else {
    for (Index k = 0; k < values.rows(); ++k) t.header.push_back(prefix + std::to_string(k));
  }
  for (Index j = 0; j < pts.cols(); ++j) {
    std::vector<double> row(pts.col(j).data(), pts.col(j).data() + pts.rows());
    for (Index k = 0; k < values.rows(); ++k) row.push_back(values(k, j));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Runs body; a pair outside the convex order becomes an exit-2 report carrying a witness.
Outcome with_order(const DiscreteMeasured& mu, const DiscreteMeasured& nu, Outcome o, const std::function<void(Outcome&)>& body) {
  try {
    body(o);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotInConvexOrder) throw;
    const auto cert = convex_order_check(mu, nu);
    o.results = {{"in_order", false}, {"error", "NotInConvexOrder"}, {"message", e.what()}};
    if (cert.witness) o.results["witness"] = io::to_json(*cert.witness);
    o.code = kInfeasible;
  }
  return o;
}

Outcome ot_solve(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  const auto cost = cost_input(a, o);
  const auto plan = kantorovich_primal(mu, nu, cost);
  o.results = {{"value", plan.value}, {"coupling", io::to_json(plan.coupling)}};
  return o;
}

Outcome ot_dual(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  const auto cost = cost_input(a, o);
  const auto dual = kantorovich_dual(mu, nu, cost);
  const auto plan = kantorovich_primal(mu, nu, cost);
  const auto tight = tight_support_report(dual.potentials, plan.coupling, cost, tol_or(a, 1e-7));
  o.results = {{"value", dual.value},
               {"phi", io::to_json(dual.potentials.phi)},
               {"psi", io::to_json(dual.potentials.psi)},
               {"max_violation", dual_violation(dual.potentials, cost)},
               {"primal_value", plan.value},
               {"gap", std::abs(plan.value - dual.value)},
               {"coupling", io::to_json(plan.coupling)},
               {"tight", {{"ok", tight.ok}, {"untight_mass", tight.untight_mass}, {"pairs", tight.pairs.size()}}}};
  return o;
}

Outcome ot_kr(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  const auto cost = cost_input(a, o);
  const auto kr = kr_dual(mu, nu, cost);
  const auto plan = kantorovich_primal(mu, nu, cost);
  o.results = {{"value", kr.value},
               {"f", io::to_json(kr.f)},
               {"two_potential_value", plan.value},
               {"gap", std::abs(plan.value - kr.value)},
               {"coupling", io::to_json(plan.coupling)},
               {"tight_ok", kr_tight_check(kr.f, plan.coupling, cost, tol_or(a, 1e-7))}};
  return o;
}

Outcome ot_multi(const Args& a) {
  Outcome o;
  if (a.measures.size() < 2) {
    throw io::InputError(ErrorCode::InvalidInput, io::Diagnostic{"--measures", "", "two or more measure files are required"});
  }
  std::vector<DiscreteMeasured> ms;
  json echo = json::array();
  for (const auto& m : a.measures) {
    ms.push_back(io::parse_measure(io::load(m, "--measures")));
    if (ms.back().dim() != ms.front().dim()) {
      throw io::InputError(ErrorCode::DimensionMismatch, io::Diagnostic{a.measures.front() + " and " + m, "/dim", "dimensions differ"});
    }
    echo.push_back(io::to_json(ms.back()));
  }
  o.inputs["measures"] = echo;
  const auto cost = io::parse_multicost(doc(a.multicost, "--multicost"));
  o.inputs["multicost"] = io::to_json(cost);
  const auto primal = multimarginal_primal(ms, cost);
  const auto dual = multimarginal_dual(ms, cost);
  json pots = json::array();
  for (const auto& f : dual.potentials.f) pots.push_back(io::to_json(f));
  o.results = {{"value", primal.value},
               {"dual_value", dual.value},
               {"gap", std::abs(primal.value - dual.value)},
               {"shape", primal.coupling.shape()},
               {"mass", io::to_json(primal.coupling.mass())},
               {"potentials", pots}};
  if (!a.seed_point.empty()) {
    const auto supports = detail::support_points(ms);
    const auto conv = multi_c_convexify_seeded(a.seed_point, cost, supports);
    const auto norm = normalize_potentials(conv.potentials, cost, supports);
    json cp = json::array(), np = json::array();
    for (const auto& f : conv.potentials.f) cp.push_back(io::to_json(f));
    for (const auto& f : norm.potentials.f) np.push_back(io::to_json(f));
    o.inputs["seed_point"] = a.seed_point;
    o.results["convexified"] = {{"potentials", cp},
                                {"residual", conv.residual},
                                {"sweeps", conv.sweeps},
                                {"max_violation", multi_dual_violation(conv.potentials, cost, supports)},
                                {"normalized", np},
                                {"shifts", norm.shifts},
                                {"bound", norm.bound}};
  }
  return o;
}

Outcome order_check(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  const auto cert = convex_order_check(mu, nu);
  o.results = {{"in_order", cert.in_order},
               {"coupling", cert.coupling ? io::to_json(*cert.coupling) : json(nullptr)},
               {"witness", cert.witness ? io::to_json(*cert.witness) : json(nullptr)}};
  if (cert.coupling) o.results["max_barycenter_residual"] = max_or_zero(barycenter_residuals(*cert.coupling));
  if (!cert.in_order) o.code = kInfeasible;
  return o;
}

Outcome order_couple(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  return with_order(mu, nu, std::move(o), [&](Outcome& out) {
    const auto pi = strassen_coupling(mu, nu);
    out.results = {{"in_order", true}, {"coupling", io::to_json(pi)}, {"max_barycenter_residual", max_or_zero(barycenter_residuals(pi))}};
  });
}

Outcome order_decompose(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  return with_order(mu, nu, std::move(o), [&](Outcome& out) {
    const auto rep = choquet_represent(mu, nu);
    bool extreme = true;
    for (const auto& e : rep.entries) {
      extreme = extreme && is_extreme_pair<double>(e.fan.center, DiscreteMeasured(e.fan.atoms, e.fan.lambdas)).extreme;
    }
    out.results = {{"in_order", true},
                   {"representation", io::to_json(rep)},
                   {"entries", rep.entries.size()},
                   {"all_extreme", extreme},
                   {"recomposition_error", recomposition_error(rep, mu, nu)}};
  });
}

Outcome mot_solve(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  const auto cost = cost_input(a, o);
  return with_order(mu, nu, std::move(o), [&](Outcome& out) {
    const auto plan = mot_primal(mu, nu, cost);
    out.results = {{"value", plan.value},
                   {"coupling", io::to_json(plan.coupling)},
                   {"max_barycenter_residual", max_or_zero(barycenter_residuals(plan.coupling))}};
  });
}

Outcome mot_dual_cmd(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  const auto cost = cost_input(a, o);
  return with_order(mu, nu, std::move(o), [&](Outcome& out) {
    const auto r = mot_dual(mu, nu, cost);
    out.results = {{"value", r.value},
                   {"u", io::to_json(r.dual.u)},
                   {"v", io::to_json(r.dual.v)},
                   {"gamma", io::columns_json(r.dual.gamma)},
                   {"max_violation", mot_dual_violation(r.dual, cost)}};
  });
}

Outcome mot_dual_sym(const Args& a) {
  Outcome o;
  const auto [mu, nu] = measure_pair(a, o);
  const auto cost = cost_input(a, o);
  return with_order(mu, nu, std::move(o), [&](Outcome& out) {
    const auto r = mot_dual_symmetric(mu, nu, cost);
    const double general = mot_dual(mu, nu, cost).value;
    out.results = {{"value", r.value},
                   {"f", io::to_json(r.dual.f)},
                   {"gamma", io::columns_json(r.dual.gamma)},
                   {"max_violation", symmetric_dual_violation(r.dual, cost)},
                   {"general_value", general},
                   {"gap", general - r.value}};
  });
}

Outcome class_check(const Args& a) {
  Outcome o;
  const auto f1 = evaluator_input(a.f1, "--f1", "f1", o);
  const auto f2 = a.f2.empty() ? f1 : evaluator_input(a.f2, "--f2", "f2", o);
  const auto cost = cost_input(a, o);
  const auto dom = io::parse_domain(doc(a.domain, "--domain"));
  o.inputs["domain"] = io::to_json(dom);
  o.inputs["samples"] = a.samples;
  const auto rep = simplex_inequality_check(f1, f2, cost, dom, a.samples, a.seed, tol_or(a, kSimplexTol));
  o.results = io::to_json(rep);
  if (!rep.ok) o.code = kInfeasible;
  return o;
}

FaceRule<double> face_rule(const Args& a, const Eigen::MatrixXd& X) {
  if (a.faces == "box") return FaceRule<double>::box_faces(X.rowwise().minCoeff(), X.rowwise().maxCoeff());
  if (a.faces != "all") throw io::InputError(ErrorCode::InvalidInput, io::Diagnostic{"--faces", "", "expected 'all' or 'box'"});
  return FaceRule<double>::all_points();
}

void certificate_results(Outcome& o, const GammaCertificate<double>& cert, const Eigen::MatrixXd& X) {
  o.results = io::to_json(cert);
  o.results["points"] = io::columns_json(X);
  if (!cert.ok) o.code = kInfeasible;
  o.table = point_table(X, cert.gamma, "gamma");
}

Outcome class_certify(const Args& a) {
  Outcome o;
  const auto f1 = evaluator_input(a.f1, "--f1", "f1", o);
  const auto f2 = a.f2.empty() ? f1 : evaluator_input(a.f2, "--f2", "f2", o);
  const auto cost = cost_input(a, o);
  const Eigen::MatrixXd X = points_input(a.points, "--points", "points", o);
  const Eigen::MatrixXd Y = a.ypoints.empty() ? X : points_input(a.ypoints, "--ypoints", "ypoints", o);
  const auto faces = face_rule(a, X);
  const auto cert = gamma_certify(f1.sample(X), f2.sample(Y), cost, faces, tol_or(a, kGammaTol));
  certificate_results(o, cert, X);
  return o;
}

Outcome class_extend(const Args& a) {
  Outcome o;
  const auto gf = evaluator_input(a.g, "--g", "g", o);
  const auto cost = cost_input(a, o);
  const Eigen::MatrixXd K = points_input(a.points, "--points", "points", o);
  const Eigen::MatrixXd T = points_input(a.targets, "--targets", "targets", o);
  const auto g = gf.sample(K);
  std::optional<FunctionEvaluatord> lower;
  if (!a.lower.empty()) lower = evaluator_input(a.lower, "--lower", "lower", o);
  Eigen::MatrixXd gamma;
  std::string source;
  if (!a.gamma.empty()) {
    gamma = io::parse_columns(io::load(a.gamma, "--gamma"), K.rows());
    source = "supplied";
    o.inputs["gamma"] = io::columns_json(gamma);
  } else {
    const auto cert = gamma_certify(g, g, cost, FaceRule<double>::all_points(), tol_or(a, kGammaTol));
    if (!cert.ok) {
      o.results = {{"error", "GammaMissing"}, {"certificate", io::to_json(cert)}};
      o.code = kInfeasible;
      return o;
    }
    gamma = cert.gamma;
    source = "certified";
  }
  const auto ext = extend(g, cost, gamma, T, lower);
  const auto back = extend(g, cost, gamma, K);
  o.results = {{"values", io::to_json(ext)},
               {"gamma_source", source},
               {"gamma", io::columns_json(gamma)},
               {"gamma_violation", std::max(0.0, gamma_violation(g, g, cost, gamma))},
               {"restriction_error", (back.values() - g.values()).cwiseAbs().maxCoeff()}};
  o.table = point_table(T, ext.values().transpose(), "value");
  return o;
}

Outcome class_generate(const Args& a) {
  Outcome o;
  auto atoms = io::parse_atoms(doc(a.atoms, "--atoms"));
  const auto cost = cost_input(a, o);
  const auto f = bclass_generate(std::move(atoms), cost);
  o.inputs["atoms"] = io::to_json(f)["atoms"];
  o.results = {{"evaluator", io::to_json(f)}};
  if (!a.points.empty()) {
    const Eigen::MatrixXd X = points_input(a.points, "--points", "points", o);
    const auto s = f.sample(X);
    o.results["samples"] = io::to_json(s);
    o.table = point_table(X, s.values().transpose(), "value");
  }
  return o;
}

Outcome mti_check_cmd(const Args& a) {
  Outcome o;
  const auto cost = cost_input(a, o);
  const auto dom = io::parse_domain(doc(a.domain, "--domain"));
  o.inputs["domain"] = io::to_json(dom);
  o.inputs["samples"] = a.samples;
  const auto rep = mti_check(cost, dom, a.samples, a.seed, tol_or(a, kSimplexTol));
  o.results = io::to_json(rep);
  if (!rep.ok) o.code = kInfeasible;
  return o;
}

Outcome mti_hessian(const Args& a) {
  Outcome o;
  const auto cost = cost_input(a, o);
  const auto grid = io::parse_box_grid(doc(a.grid, "--grid"));
  o.inputs["grid"] = io::to_json(grid);
  o.inputs["h"] = a.h;
  const auto rep = mti_second_order_check(cost, grid, a.h);
  o.results = {{"ok", rep.ok},
               {"x", rep.x ? io::to_json(*rep.x) : json(nullptr)},
               {"y", rep.y ? io::to_json(*rep.y) : json(nullptr)},
               {"min_eigenvalue", rep.min_eigenvalue},
               {"tol", rep.tol},
               {"pairs", rep.pairs}};
  if (!rep.ok) o.code = kInfeasible;
  return o;
}

Outcome uniform_certify(const Args& a, bool convexity) {
  Outcome o;
  const auto f = evaluator_input(a.f, "--f", "f", o);
  const auto sigma = io::parse_modulus(doc(a.sigma, "--sigma"));
  o.inputs["sigma"] = io::to_json(sigma);
  const Eigen::MatrixXd X = points_input(a.points, "--points", "points", o);
  const auto faces = face_rule(a, X);
  const auto cert = convexity ? uniform_convexity_certify(f, sigma, X, faces, tol_or(a, kGammaTol))
                              : uniform_smoothness_certify(f, sigma, X, faces, tol_or(a, kGammaTol));
  certificate_results(o, cert, X);
  return o;
}

void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  char buf[40];
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i] + 0.0);
      os << (i ? "," : "") << buf;
    }
    os << '\n';
  }
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInConvexOrder:
    case ErrorCode::InfeasibleInput: return kInfeasible;
    case ErrorCode::NumericalBreakdown: return kNumerical;
    default: return kInputError;
  }
}

}  // namespace

int run(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Discrete optimal, multimarginal and martingale transport toolkit", "choquet"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  app.add_option("--tol", a.tol, "Tolerance for checks (command-specific default)");
  app.add_option("--seed", a.seed, "Seed for sampled checks");
  app.add_option("--samples", a.samples, "Number of sampled simplices");
  app.add_option("--out", a.out, "Write the report here instead of stdout");
  app.add_option("--format", a.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  struct Leaf {
    CLI::App* app;
    std::string name;
    Handler handler;
  };
  std::vector<Leaf> leaves;

  const auto group = [&](const std::string& name, const std::string& desc) {
    CLI::App* g = app.add_subcommand(name, desc);
    g->require_subcommand(1);
    g->fallthrough();
    return g;
  };
  const auto leaf = [&](CLI::App* g, const std::string& name, const std::string& desc, Handler h) {
    CLI::App* s = g->add_subcommand(name, desc);
    s->fallthrough();
    leaves.push_back({s, g->get_name() + " " + name, std::move(h)});
    return s;
  };
  const auto pair_opts = [&](CLI::App* s, bool with_cost) {
    s->add_option("--mu", a.mu, "Source measure (file or inline JSON)")->required();
    s->add_option("--nu", a.nu, "Target measure (file or inline JSON)")->required();
    if (with_cost) s->add_option("--cost", a.cost, "Cost (file or inline JSON)")->required();
  };

  CLI::App* ot = group("ot", "Two- and multi-marginal optimal transport");
  pair_opts(leaf(ot, "solve", "Primal transport plan", ot_solve), true);
  pair_opts(leaf(ot, "dual", "Dual potentials and tight-support report", ot_dual), true);
  pair_opts(leaf(ot, "kr", "Single-potential dual for metric costs", ot_kr), true);
  CLI::App* multi = leaf(ot, "multi", "Multimarginal primal and dual", ot_multi);
  multi->add_option("--measures", a.measures, "Marginal measure files")->required()->expected(2, -1);
  multi->add_option("--multicost", a.multicost, "Multimarginal cost")->required();
  multi->add_option("--seed-point", a.seed_point, "Product index for seeded convexification")->expected(1, -1);

  CLI::App* order = group("order", "Convex order, Strassen couplings and fan decompositions");
  pair_opts(leaf(order, "check", "Decide the convex order with a certificate", order_check), false);
  pair_opts(leaf(order, "couple", "Martingale coupling", order_couple), false);
  pair_opts(leaf(order, "decompose", "Mixture of fan martingales", order_decompose), false);

  CLI::App* mot = group("mot", "Martingale optimal transport");
  pair_opts(leaf(mot, "solve", "Primal martingale transport", mot_solve), true);
  pair_opts(leaf(mot, "dual", "Dual with u, v and gamma", mot_dual_cmd), true);
  pair_opts(leaf(mot, "dual-sym", "Dual restricted to u = v", mot_dual_sym), true);

  CLI::App* cls = group("class", "Simplex inequalities, gamma certificates and extensions");
  CLI::App* check = leaf(cls, "check", "Sample simplex inequalities", class_check);
  check->add_option("--f1", a.f1, "Function f1")->required();
  check->add_option("--f2", a.f2, "Function f2 (defaults to f1)");
  check->add_option("--cost", a.cost, "Cost")->required();
  check->add_option("--domain", a.domain, "Box {lo, hi} or finite set {points}")->required();
  CLI::App* certify = leaf(cls, "certify", "Per-point gamma certificates", class_certify);
  certify->add_option("--f1", a.f1, "Function f1")->required();
  certify->add_option("--f2", a.f2, "Function f2 (defaults to f1)");
  certify->add_option("--cost", a.cost, "Cost")->required();
  certify->add_option("--points", a.points, "Set X: {points} or grid {lo, hi, counts}")->required();
  certify->add_option("--ypoints", a.ypoints, "Set Y (defaults to X)");
  certify->add_option("--faces", a.faces, "Constraint rows: all or box");
  CLI::App* ext = leaf(cls, "extend", "Extend a certified function beyond its grid", class_extend);
  ext->add_option("--g", a.g, "Function on K")->required();
  ext->add_option("--cost", a.cost, "Cost")->required();
  ext->add_option("--points", a.points, "Grid K")->required();
  ext->add_option("--targets", a.targets, "Target points")->required();
  ext->add_option("--gamma", a.gamma, "Gamma columns on K (certified when omitted)");
  ext->add_option("--lower", a.lower, "Lower bound function");
  CLI::App* gen = leaf(cls, "generate", "Supremum of c-affine atoms", class_generate);
  gen->add_option("--atoms", a.atoms, "Atoms [{y, a, b}]")->required();
  gen->add_option("--cost", a.cost, "Cost")->required();
  gen->add_option("--points", a.points, "Optional evaluation points");

  CLI::App* mti = group("mti", "Martingale triangle inequality");
  CLI::App* mcheck = leaf(mti, "check", "Sample the triangle inequality", mti_check_cmd);
  mcheck->add_option("--cost", a.cost, "Cost")->required();
  mcheck->add_option("--domain", a.domain, "Box {lo, hi} or finite set {points}")->required();
  CLI::App* hess = leaf(mti, "hessian", "Second-order necessary condition", mti_hessian);
  hess->add_option("--cost", a.cost, "Cost")->required();
  hess->add_option("--grid", a.grid, "Grid {lo, hi, counts}")->required();
  hess->set_help_flag("--help", "Print this help message and exit");
  hess->add_option("--h", a.h, "Central-difference step");

  for (const auto& [name, convexity] : {std::pair<const char*, bool>{"ucvx", true}, {"usmooth", false}}) {
    CLI::App* g = group(name, convexity ? "Uniform convexity" : "Uniform smoothness");
    CLI::App* s = leaf(g, "certify", "Per-point gamma certificates", [convexity](const Args& args) { return uniform_certify(args, convexity); });
    s->add_option("--f", a.f, "Function")->required();
    s->add_option("--sigma", a.sigma, "Modulus {kind: power|zero|custom}")->required();
    s->add_option("--points", a.points, "Grid: {points} or {lo, hi, counts}")->required();
    s->add_option("--faces", a.faces, "Constraint rows: all or box");
  }

  std::vector<std::string> reversed(argv_in.rbegin(), argv_in.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  const Leaf* chosen = nullptr;
  for (const auto& l : leaves) {
    if (l.app->parsed()) chosen = &l;
  }
  if (!chosen) {
    err << "error: no command given\n";
    return kInputError;
  }

  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    o = chosen->handler(a);
  } catch (const io::InputError& e) {
    err << "error: " << e.diagnostic().str() << '\n';
    return kInputError;
  } catch (const Error& e) {
    const int code = exit_for(e.code());
    err << "error: " << e.what() << '\n';
    if (code != kInfeasible) return code;
    o.results = {{"error", to_string(e.code())}, {"message", e.what()}};
    o.code = code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (a.format == "csv" && !o.table) {
    err << "error: csv output is only available for grid-sampled results (class certify, class extend, "
           "class generate --points, ucvx certify, usmooth certify)\n";
    return kInputError;
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) {
      err << "error: cannot write " << a.out << '\n';
      return kInputError;
    }
    sink = &file;
  }
  if (a.format == "csv") {
    write_csv(*sink, *o.table);
  } else {
    const json report = {{"command", chosen->name},
                         {"inputs", o.inputs},
                         {"results", o.results},
                         {"timing", ms},
                         {"seed", a.seed},
                         {"tool_version", tool_version()}};
    *sink << io::dump(report) << '\n';
  }
  return o.code;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace choquet::cli
