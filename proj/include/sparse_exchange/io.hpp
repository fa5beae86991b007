#ifndef SPARSE_EXCHANGE_IO_HPP
#define SPARSE_EXCHANGE_IO_HPP

// File formats of the experiment harness.
//
// Scenario files are JSON with a versioned schema ("schema_version": 1).
// Unknown keys are rejected. Example:
//
//   {
//     "schema_version": 1,
//     "n": 25,
//     "endowments": {"lognormal": {"mu_log": 4.5, "sigma_sq": 0.25, "seed": 1}},
//     "init": {"mode": "random", "seed": 7},
//     "algorithm": "sparse",
//     "params": {"c": 0.1, "eps": 0.01, "tau": 0.01},
//     "run": {"max_iters": 5000, "conv_tol": 1e-8, "record_every": 10}
//   }
//
// "endowments" may instead be {"explicit": [a_1, ..., a_N]}, in which case
// "n" is optional. "init", "algorithm", "params" and "run" are optional and
// default to equal split, sparse, and the RunConfig / SparsityParams defaults.

#include "sparse_exchange/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sparse_exchange::io {

/// Malformed input file; what() reads "source:line: message".
class ParseError : public Error {
 public:
  ParseError(std::string source, int line, const std::string& message);
  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

inline constexpr int kScenarioSchemaVersion = 1;

ScenarioSpec parse_scenario(std::string_view text, const std::string& source = "<scenario>");
ScenarioSpec load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

/// Endowments as a JSON array, a JSON object {"endowments": [...]}, or
/// whitespace/comma separated numbers.
std::vector<double> parse_endowments(std::string_view text, const std::string& source = "<endowments>");
std::vector<double> load_endowments(const std::filesystem::path& path);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

inline constexpr std::string_view kMetricsHeader =
    "t,cardinality,reciprocity,min_ratio,d_ra,d_ar,step_delta";
std::string metrics_csv(const std::vector<MetricsRecord>& records);

/// Final state of a run with its endowments, parameters and seeds.
std::string allocation_json(const ScenarioSpec& spec, const RunResult<double>& result);

struct LoadedAllocation {
  MarketState<double> state;
  SparsityParams params;
  Algorithm algorithm = Algorithm::SPARSE;
};
LoadedAllocation parse_allocation_json(std::string_view text, const std::string& source = "<allocation>");

/// Directed graph of links above the tau threshold; edges point from giver
/// to receiver and carry the allocation rounded to 2 decimals, nodes carry
/// their endowment.
std::string graph_dot(const MarketState<double>& state, double tau);

/// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace sparse_exchange::io

#endif  // SPARSE_EXCHANGE_IO_HPP
