#include "choquet/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace choquet::io {

std::string Diagnostic::str() const {
  std::string s = source;
  if (!pointer.empty()) s += " at " + pointer;
  return s + ": " + message;
}

namespace {

/// Cursor into a document: the node plus its JSON pointer.
struct Node {
  const json& j;
  std::string ptr;
  const std::string& source;

  [[noreturn]] void fail(const std::string& msg, ErrorCode code = ErrorCode::InvalidInput) const {
    throw InputError(code, Diagnostic{source, ptr.empty() ? "/" : ptr, msg});
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  bool has(const std::string& key) const { return j.is_object() && j.contains(key); }

  Node at(const std::string& key) const {
    if (!j.is_object()) fail("expected an object");
    if (!j.contains(key)) Node{j, ptr + "/" + escape(key), source}.fail("missing field");
    return Node{j.at(key), ptr + "/" + escape(key), source};
  }

  Node at(std::size_t i) const { return Node{j.at(i), ptr + "/" + std::to_string(i), source}; }

  std::size_t array_size() const {
    if (!j.is_array()) fail("expected an array");
    return j.size();
  }

  double number() const {
    if (!j.is_number()) fail("expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number", ErrorCode::NonFinite);
    return v;
  }

  Index integer() const {
    if (!j.is_number_integer()) fail("expected an integer");
    return static_cast<Index>(j.get<long long>());
  }

  std::string string() const {
    if (!j.is_string()) fail("expected a string");
    return j.get<std::string>();
  }

  Eigen::VectorXd vector(std::optional<Index> len = std::nullopt) const {
    const std::size_t n = array_size();
    if (len && static_cast<Index>(n) != *len) fail("expected " + std::to_string(*len) + " entries", ErrorCode::DimensionMismatch);
    Eigen::VectorXd v(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Index>(i)) = at(i).number();
    return v;
  }

  /// List of equal-length vectors, returned as columns.
  Eigen::MatrixXd columns(std::optional<Index> dim = std::nullopt) const {
    const std::size_t n = array_size();
    if (n == 0) fail("expected a nonempty list of points");
    const Index d = dim ? *dim : static_cast<Index>(at(0).array_size());
    if (d == 0) fail("points must have at least one coordinate");
    Eigen::MatrixXd m(d, static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) m.col(static_cast<Index>(i)) = at(i).vector(d);
    return m;
  }

  /// List of equal-length rows, returned as a matrix.
  Eigen::MatrixXd rows(std::optional<Index> cols = std::nullopt) const {
    Eigen::MatrixXd t = columns(cols);
    return t.transpose();
  }

  std::vector<Index> indices() const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < array_size(); ++i) out.push_back(at(i).integer());
    return out;
  }
};

Node root(const Document& doc) { return Node{doc.value, "", doc.source}; }

/// Runs f, re-raising library errors as diagnostics at node.
template <typename F>
auto guarded(const Node& node, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    node.fail(e.what(), e.code());
  }
}

CostSpecd cost_from(const Node& n);

std::optional<double> optional_number(const Node& n, const std::string& key) {
  if (!n.has(key)) return std::nullopt;
  return n.at(key).number();
}

CostSpecd cost_from(const Node& n) {
  const std::string kind = n.at("kind").string();
  CostSpecd c;
  if (kind == "euclidean") {
    c = CostSpecd::euclidean();
  } else if (kind == "sq_euclidean") {
    c = CostSpecd::sq_euclidean();
  } else if (kind == "manhattan") {
    c = CostSpecd::manhattan();
  } else if (kind == "zero") {
    c = CostSpecd::zero();
  } else if (kind == "truncated_euclidean") {
    const Node t = n.at("threshold");
    c = guarded(t, [&] { return CostSpecd::truncated_euclidean(t.number()); });
  } else if (kind == "linear") {
    c = CostSpecd::linear(n.at("a").vector());
  } else if (kind == "power") {
    const Node p = n.at("p");
    c = guarded(p, [&] { return CostSpecd::power(p.number()); });
  } else if (kind == "scaled") {
    c = CostSpecd::scaled(n.at("factor").number(), cost_from(n.at("cost")));
  } else if (kind == "matrix") {
    const Node g = n.at("grid");
    const Eigen::MatrixXd grid = g.columns();
    const Node v = n.at("values");
    const Eigen::MatrixXd values = v.rows(grid.cols());
    if (values.rows() != grid.cols()) v.fail("expected one row per grid point", ErrorCode::DimensionMismatch);
    c = guarded(g, [&] { return CostSpecd::matrix(grid, values); });
  } else if (kind == "conical") {
    const Node terms = n.at("terms");
    std::vector<double> weights;
    std::vector<CostSpecd> costs;
    for (std::size_t i = 0; i < terms.array_size(); ++i) {
      const Node t = terms.at(i);
      const double w = t.at("weight").number();
      if (w < 0) t.at("weight").fail("conical weights must be nonnegative");
      weights.push_back(w);
      costs.push_back(cost_from(t.at("cost")));
    }
    c = CostSpecd::conical(std::move(weights), std::move(costs));
  } else {
    n.at("kind").fail("unknown cost kind '" + kind + "'");
  }
  if (const auto l = optional_number(n, "lipschitz")) c.set_lipschitz(*l);
  if (const auto g = optional_number(n, "growth")) c.set_growth(*g);
  return c;
}

std::vector<BAtom<double>> atoms_from(const Node& n) {
  std::vector<BAtom<double>> atoms;
  const std::size_t count = n.array_size();
  if (count == 0) n.fail("at least one atom is required", ErrorCode::EmptyAtoms);
  std::optional<Index> dim;
  for (std::size_t i = 0; i < count; ++i) {
    const Node a = n.at(i);
    BAtom<double> atom;
    atom.y = a.at("y").vector(dim);
    dim = atom.y.size();
    atom.a = a.has("a") ? a.at("a").vector(dim) : Eigen::VectorXd::Zero(*dim);
    atom.b = a.has("b") ? a.at("b").number() : 0.0;
    atoms.push_back(std::move(atom));
  }
  return atoms;
}

FunctionEvaluatord evaluator_from(const Node& n) {
  const std::string kind = n.at("kind").string();
  if (kind == "samples") {
    const Eigen::MatrixXd pts = n.at("points").columns();
    const Eigen::VectorXd vals = n.at("values").vector(pts.cols());
    return guarded(n.at("points"), [&] { return FunctionEvaluatord::samples(SampledFunctiond(pts, vals)); });
  }
  if (kind == "quadratic" || kind == "neg_quadratic") {
    const Eigen::MatrixXd Q = n.at("Q").rows();
    if (Q.rows() != Q.cols()) n.at("Q").fail("Q must be square", ErrorCode::DimensionMismatch);
    const Eigen::VectorXd b = n.has("b") ? n.at("b").vector(Q.rows()) : Eigen::VectorXd::Zero(Q.rows());
    const double c = n.has("c") ? n.at("c").number() : 0.0;
    return kind == "quadratic" ? FunctionEvaluatord::quadratic(Q, b, c) : FunctionEvaluatord::neg_quadratic(Q, b, c);
  }
  if (kind == "abs_norm") return FunctionEvaluatord::abs_norm();
  if (kind == "max_affine") {
    const Eigen::MatrixXd slopes = n.at("slopes").columns();
    const Eigen::VectorXd b = n.at("intercepts").vector(slopes.cols());
    return FunctionEvaluatord::max_affine(slopes, b);
  }
  if (kind == "bclass_sup") return FunctionEvaluatord::bclass_sup(atoms_from(n.at("atoms")), cost_from(n.at("cost")));
  if (kind == "negated") return evaluator_from(n.at("inner")).negated();
  n.at("kind").fail("unknown evaluator kind '" + kind + "'");
}

BoxGrid<double> grid_from(const Node& n) {
  const Eigen::VectorXd lo = n.at("lo").vector();
  const Eigen::VectorXd hi = n.at("hi").vector(lo.size());
  const Node cn = n.at("counts");
  const std::vector<Index> counts = cn.indices();
  if (static_cast<Index>(counts.size()) != lo.size()) cn.fail("expected one count per axis", ErrorCode::DimensionMismatch);
  return guarded(n, [&] { return BoxGrid<double>(lo, hi, counts); });
}

}  // namespace

Document load(const std::string& arg, const std::string& flag) {
  std::size_t k = arg.find_first_not_of(" \t\r\n");
  const bool inline_json = k != std::string::npos && (arg[k] == '{' || arg[k] == '[');
  Document doc;
  std::string text;
  if (inline_json) {
    doc.source = "<inline " + flag + ">";
    text = arg;
  } else {
    doc.source = arg;
    std::ifstream in(arg);
    if (!in) throw InputError(ErrorCode::InvalidInput, Diagnostic{arg, "", "cannot open file given to " + flag});
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    doc.value = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(ErrorCode::InvalidInput, Diagnostic{doc.source, "", std::string("malformed JSON: ") + e.what()});
  }
  return doc;
}

DiscreteMeasured parse_measure(const Document& doc) {
  const Node n = root(doc);
  const Node dn = n.at("dim");
  const Index dim = dn.integer();
  if (dim < 1) dn.fail("dim must be positive");
  const Node pn = n.at("points");
  const Eigen::MatrixXd pts = pn.columns(dim);
  const Node wn = n.at("weights");
  const Eigen::VectorXd w = wn.vector();
  if (w.size() != pts.cols()) wn.fail("expected one weight per point", ErrorCode::DimensionMismatch);
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) < 0) wn.at(static_cast<std::size_t>(i)).fail("negative weight", ErrorCode::NegativeWeight);
  }
  if (std::abs(w.sum() - 1.0) > kMassRenormalizeTol) {
    wn.fail("weights sum to " + std::to_string(w.sum()) + ", not 1", ErrorCode::MassNotOne);
  }
  PointIndex<double> seen;
  for (Index j = 0; j < pts.cols(); ++j) {
    if (!seen.insert(pts.col(j), j)) pn.at(static_cast<std::size_t>(j)).fail("repeated point", ErrorCode::DuplicatePoint);
  }
  return guarded(n, [&] { return DiscreteMeasured(pts, w); });
}

CostSpecd parse_cost(const Document& doc) { return cost_from(root(doc)); }

MultiCost<double> parse_multicost(const Document& doc) {
  const Node n = root(doc);
  const std::string kind = n.at("kind").string();
  if (kind == "pairwise_sum") return MultiCost<double>::pairwise_sum(cost_from(n.at("cost")));
  if (kind == "tensor") {
    const Node vn = n.at("values");
    const std::vector<Index> shape = n.at("shape").indices();
    const Eigen::VectorXd v = vn.vector();
    return guarded(vn, [&] { return MultiCost<double>::tensor(shape, v); });
  }
  n.at("kind").fail("unknown multimarginal cost kind '" + kind + "'");
}

FunctionEvaluatord parse_evaluator(const Document& doc) { return evaluator_from(root(doc)); }

Domain<double> parse_domain(const Document& doc) {
  const Node n = root(doc);
  if (n.has("points")) {
    const Node p = n.at("points");
    const Eigen::MatrixXd pts = p.columns();
    return guarded(p, [&] { return Domain<double>::finite(pts); });
  }
  const Eigen::VectorXd lo = n.at("lo").vector();
  const Eigen::VectorXd hi = n.at("hi").vector(lo.size());
  return guarded(n, [&] { return Domain<double>::box(lo, hi); });
}

BoxGrid<double> parse_box_grid(const Document& doc) { return grid_from(root(doc)); }

Eigen::MatrixXd parse_point_set(const Document& doc) {
  const Node n = root(doc);
  if (n.j.is_array()) return n.columns();
  if (n.has("points")) return n.at("points").columns();
  return grid_from(n).points();
}

ModulusSpecd parse_modulus(const Document& doc) {
  const Node n = root(doc);
  const std::string kind = n.at("kind").string();
  if (kind == "zero") return ModulusSpecd::zero();
  if (kind == "power") {
    const Node p = n.at("p");
    const double scale = n.has("scale") ? n.at("scale").number() : 1.0;
    return guarded(p, [&] { return ModulusSpecd::power(p.number(), scale); });
  }
  if (kind == "custom") {
    const Eigen::VectorXd t = n.at("t").vector();
    const Eigen::VectorXd v = n.at("values").vector(t.size());
    return guarded(n, [&] {
      return ModulusSpecd::custom(std::vector<double>(t.data(), t.data() + t.size()),
                                  std::vector<double>(v.data(), v.data() + v.size()));
    });
  }
  n.at("kind").fail("unknown modulus kind '" + kind + "'");
}

std::vector<BAtom<double>> parse_atoms(const Document& doc) {
  const Node n = root(doc);
  return atoms_from(n.has("atoms") ? n.at("atoms") : n);
}

Eigen::MatrixXd parse_columns(const Document& doc, Index rows) {
  const Node n = root(doc);
  const Node m = n.has("gamma") ? n.at("gamma") : n;
  return m.columns(rows);
}

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json columns_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Index j = 0; j < m.cols(); ++j) a.push_back(to_json(Eigen::VectorXd(m.col(j))));
  return a;
}

json rows_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

json to_json(const DiscreteMeasured& m) {
  return {{"dim", m.dim()}, {"points", columns_json(m.points())}, {"weights", to_json(m.weights())}};
}

json to_json(const CostSpecd& c) {
  json j = {{"kind", nullptr}};
  switch (c.kind()) {
    case CostKind::Euclidean: j["kind"] = "euclidean"; break;
    case CostKind::SqEuclidean: j["kind"] = "sq_euclidean"; break;
    case CostKind::Manhattan: j["kind"] = "manhattan"; break;
    case CostKind::Zero: j["kind"] = "zero"; break;
    case CostKind::TruncatedEuclidean:
      j["kind"] = "truncated_euclidean";
      j["threshold"] = c.threshold();
      break;
    case CostKind::Linear:
      j["kind"] = "linear";
      j["a"] = to_json(c.slope());
      break;
    case CostKind::Power:
      j["kind"] = "power";
      j["p"] = c.exponent();
      break;
    case CostKind::Scaled:
      j["kind"] = "scaled";
      j["factor"] = c.factor();
      j["cost"] = to_json(c.terms().front());
      break;
    case CostKind::Matrix:
      j["kind"] = "matrix";
      j["grid"] = columns_json(c.grid());
      j["values"] = rows_json(c.grid_values());
      break;
    case CostKind::Conical: {
      j["kind"] = "conical";
      json terms = json::array();
      for (std::size_t i = 0; i < c.terms().size(); ++i) terms.push_back({{"weight", c.weights()[i]}, {"cost", to_json(c.terms()[i])}});
      j["terms"] = terms;
      break;
    }
  }
  if (c.lipschitz()) j["lipschitz"] = *c.lipschitz();
  if (c.growth()) j["growth"] = *c.growth();
  return j;
}

json to_json(const MultiCost<double>& c) {
  if (c.kind() == MultiCost<double>::Kind::PairwiseSum) return {{"kind", "pairwise_sum"}, {"cost", to_json(c.pair())}};
  return {{"kind", "tensor"}, {"shape", c.shape()}, {"values", to_json(c.values())}};
}

json to_json(const FunctionEvaluatord& f) {
  json j = {{"kind", to_string(f.kind())}};
  switch (f.kind()) {
    case EvaluatorKind::Samples:
      j["points"] = columns_json(f.sample_data().points());
      j["values"] = to_json(f.sample_data().values());
      break;
    case EvaluatorKind::Quadratic:
    case EvaluatorKind::NegQuadratic:
      j["Q"] = rows_json(f.matrix());
      j["b"] = to_json(f.vector());
      j["c"] = f.constant();
      break;
    case EvaluatorKind::MaxAffine:
      j["slopes"] = columns_json(f.matrix());
      j["intercepts"] = to_json(f.vector());
      break;
    case EvaluatorKind::BClassSup: {
      json atoms = json::array();
      for (const auto& a : f.atoms()) atoms.push_back({{"y", to_json(a.y)}, {"a", to_json(a.a)}, {"b", a.b}});
      j["atoms"] = atoms;
      j["cost"] = to_json(f.cost());
      break;
    }
    case EvaluatorKind::Negated: j["inner"] = to_json(f.inner()); break;
    case EvaluatorKind::Custom: j["label"] = f.label(); break;
    case EvaluatorKind::AbsNorm: break;
  }
  return j;
}

json to_json(const ModulusSpecd& s) {
  switch (s.kind()) {
    case ModulusKind::Power: return {{"kind", "power"}, {"p", s.exponent()}, {"scale", s.scale()}};
    case ModulusKind::Zero: return {{"kind", "zero"}};
    case ModulusKind::Custom: return {{"kind", "custom"}, {"t", s.abscissae()}, {"values", s.samples()}};
  }
  return {};
}

json to_json(const SampledFunctiond& f) { return {{"points", columns_json(f.points())}, {"values", to_json(f.values())}}; }

json to_json(const Couplingd& c) {
  return {{"left", columns_json(c.left().points())}, {"right", columns_json(c.right().points())}, {"mass", rows_json(c.mass())}};
}

json to_json(const FanRepresentation<double>& rep) {
  json entries = json::array();
  for (const auto& e : rep.entries) {
    entries.push_back({{"weight", e.weight},
                       {"center", to_json(e.fan.center)},
                       {"atoms", columns_json(e.fan.atoms)},
                       {"lambdas", to_json(e.fan.lambdas)}});
  }
  return {{"entries", entries}};
}

json to_json(const ConvexWitness<double>& w) {
  return {{"slopes", columns_json(w.slopes)}, {"intercepts", to_json(w.intercepts)}, {"gap", w.gap}};
}

json to_json(const SimplexWitness<double>& w) {
  json j = {{"base", nullptr}, {"atoms", columns_json(w.atoms)}, {"lambdas", to_json(w.lambdas)}, {"violation", w.violation}};
  if (w.base) j["base"] = to_json(*w.base);
  j["sample_index"] = w.sample_index;
  return j;
}

json to_json(const SimplexReport<double>& r) {
  json j = {{"ok", r.ok}, {"samples", r.samples}, {"max_violation", r.max_violation}, {"max_abs_gap", r.max_abs_gap}};
  j["witness"] = r.witness ? to_json(*r.witness) : json(nullptr);
  return j;
}

json to_json(const GammaCertificate<double>& c) {
  json j = {{"ok", c.ok}, {"gamma", columns_json(c.gamma)}, {"max_violation", c.max_violation}, {"face_rule", c.face_rule}};
  if (c.counterexample) {
    const auto& ce = *c.counterexample;
    j["counterexample"] = {{"index", ce.index},
                           {"x", to_json(ce.x)},
                           {"ys", columns_json(ce.ys)},
                           {"multipliers", to_json(ce.multipliers)},
                           {"margin", ce.margin}};
  } else {
    j["counterexample"] = nullptr;
  }
  return j;
}

json to_json(const Domain<double>& d) {
  if (d.kind == Domain<double>::Kind::Finite) return {{"points", columns_json(d.points)}};
  return {{"lo", to_json(d.lo)}, {"hi", to_json(d.hi)}};
}

json to_json(const BoxGrid<double>& g) { return {{"lo", to_json(g.lo)}, {"hi", to_json(g.hi)}, {"counts", g.counts}}; }

namespace {

void write_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);
  out += buf;
}

void write(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Flat numeric arrays stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && e.is_primitive();
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat || indent < 0 ? (indent < 0 ? "," : ", ") : ",";
        if (!flat) newline(depth + 1);
        write(out, j[i], indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: write_number(out, j.get<double>()); return;
    default: out += j.dump(); return;
  }
}

}  // namespace

std::string dump(const json& j, int indent) {
  std::string out;
  write(out, j, indent, 0);
  return out;
}

}  // namespace choquet::io
