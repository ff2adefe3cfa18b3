#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "choquet/bclass.hpp"
#include "choquet/convex_order.hpp"
#include "choquet/cost.hpp"
#include "choquet/evaluator.hpp"
#include "choquet/measures.hpp"
#include "choquet/mti.hpp"
#include "choquet/multimarginal.hpp"
#include "choquet/ot.hpp"

namespace choquet::io {

using json = nlohmann::json;

/// Where an input went wrong: the file (or inline flag) and a JSON pointer inside it.
struct Diagnostic {
  std::string source;
  std::string pointer;
  std::string message;

  std::string str() const;
};

class InputError : public Error {
 public:
  InputError(ErrorCode code, Diagnostic d) : Error(code, d.str()), diag_(std::move(d)) {}
  const Diagnostic& diagnostic() const noexcept { return diag_; }

 private:
  Diagnostic diag_;
};

/// A parsed document plus the label used in diagnostics.
struct Document {
  json value;
  std::string source;
};

/// Reads arg as inline JSON when it starts with '{' or '[', otherwise as a file path.
Document load(const std::string& arg, const std::string& flag);

DiscreteMeasured parse_measure(const Document& doc);
CostSpecd parse_cost(const Document& doc);
MultiCost<double> parse_multicost(const Document& doc);
FunctionEvaluatord parse_evaluator(const Document& doc);
Domain<double> parse_domain(const Document& doc);
BoxGrid<double> parse_box_grid(const Document& doc);
/// Point set from {"points": [[...]]} or a box grid {"lo", "hi", "counts"}.
Eigen::MatrixXd parse_point_set(const Document& doc);
ModulusSpecd parse_modulus(const Document& doc);
std::vector<BAtom<double>> parse_atoms(const Document& doc);
/// A dim x n matrix given as n columns [[...], ...], or under "gamma" in an object.
Eigen::MatrixXd parse_columns(const Document& doc, Index rows);

json to_json(const Eigen::VectorXd& v);
/// Columns of m as a list of lists.
json columns_json(const Eigen::MatrixXd& m);
/// Rows of m as a list of lists.
json rows_json(const Eigen::MatrixXd& m);
json to_json(const DiscreteMeasured& m);
json to_json(const CostSpecd& c);
json to_json(const MultiCost<double>& c);
json to_json(const FunctionEvaluatord& f);
json to_json(const ModulusSpecd& s);
json to_json(const SampledFunctiond& f);
json to_json(const Couplingd& c);
json to_json(const FanRepresentation<double>& rep);
json to_json(const ConvexWitness<double>& w);
json to_json(const SimplexWitness<double>& w);
json to_json(const SimplexReport<double>& r);
json to_json(const GammaCertificate<double>& c);
json to_json(const Domain<double>& d);
json to_json(const BoxGrid<double>& g);

/// Serializes with every floating value written as %.17g.
std::string dump(const json& j, int indent = 2);

}  // namespace choquet::io
