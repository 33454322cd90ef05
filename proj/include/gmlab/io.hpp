#pragma once

#include <json.hpp>

#include <string>

#include "gmlab/counterexample.hpp"
#include "gmlab/refuter.hpp"

namespace gmlab {

/// Insertion-ordered JSON: field order is fixed by the emitting code, and
/// doubles print in shortest round-trip form, so equal values serialize to
/// identical bytes.
using Json = nlohmann::ordered_json;

namespace io {

inline constexpr int kSchemaVersion = 1;

/// Reads a design matrix from .csv (comma-separated numeric rows) or .json
/// (array of row arrays, or an object with a "design" field). Malformed CSV
/// reports the offending line number.
DesignMatrix read_design(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const SkewedTwoPoint& marginal);
Json to_json(const FiniteSupportDistribution& dist);  // atoms as row arrays
Json to_json(const MonteCarloSummary& summary);
Json to_json(const McConfirmation& confirmation);
Json to_json(const ComparisonReport& report);
Json to_json(const QuadraticEstimator& est);
Json to_json(const CounterexampleCase& found);  // carries schema_version
Json to_json(const Refutation& refutation);     // full probe payload

Eigen::MatrixXd matrix_from_json(const Json& j);
Eigen::VectorXd vector_from_json(const Json& j);
QuadraticEstimator estimator_from_json(const Json& j);
FiniteSupportDistribution distribution_from_json(const Json& j);

/// Parses a serialized CounterexampleCase back into a live value,
/// revalidating the design and estimator constraints on the way in.
CounterexampleCase case_from_json(const Json& j);
CounterexampleCase read_case(const std::string& path);

/// Parses with IoError on failure instead of nlohmann exceptions.
Json parse_json(const std::string& text, const std::string& origin);

/// Plain-text table renderings for the CLI's --format table.
std::string to_table(const ComparisonReport& report);
std::string to_table(const Refutation& refutation);

}  // namespace io
}  // namespace gmlab
