#ifndef SPARSE_EXCHANGE_EXPERIMENTS_HPP
#define SPARSE_EXCHANGE_EXPERIMENTS_HPP

// Experiment drivers behind the CLI subcommands. Each writes its files into
// an output directory (created if missing) and returns what it wrote.

#include "sparse_exchange/central.hpp"
#include "sparse_exchange/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sparse_exchange::experiments {

/// metrics.csv, allocation.json, graph.dot
RunResult<double> cmd_run(const ScenarioSpec& spec, const std::filesystem::path& out_dir);

struct EnsembleRow {
  std::uint64_t seed = 0;
  bool ok = false;
  MetricsRecord final_metrics;
  std::string error;
};

inline constexpr std::string_view kEnsembleHeader = "seed,cardinality,reciprocity,min_ratio,d_ra";
inline constexpr std::string_view kSummaryHeader = "metric,mean,median,std";

/// Runs the scenario with Random init seeds seed0 .. seed0 + runs - 1 on up
/// to `jobs` threads. Writes ensemble.csv (seed order), summary.csv, and
/// errors.csv when any run failed. Output does not depend on `jobs`.
std::vector<EnsembleRow> cmd_ensemble(const ScenarioSpec& spec, int runs, std::uint64_t seed0,
                                      int jobs, const std::filesystem::path& out_dir);

struct SweepRow {
  double c = 0.0;
  MetricsRecord final_metrics;
  std::int64_t iterations = 0;
};

inline constexpr std::string_view kSweepHeader = "c,cardinality,d_ra,min_ratio,iterations";

/// One run per penalty weight; writes sweep.csv.
std::vector<SweepRow> cmd_sweep(const ScenarioSpec& spec, const std::vector<double>& c_values,
                                const std::filesystem::path& out_dir);

enum class Method { P0, P1, P2 };
std::optional<Method> parse_method(std::string_view name);

struct SolveOptions {
  double tau = 0.01;
  /// P1: enables weight perturbation. P2: seed of the starting point.
  std::optional<std::uint64_t> seed;
  int p0_max_n = 4;
};

/// Writes solution.json. Infeasible targets produce {"status": "infeasible"}
/// rather than an exception.
nlohmann::json cmd_solve(const std::vector<double>& endowments, double theta, Method method,
                         const std::filesystem::path& out_dir, const SolveOptions& options = {});

/// Rows of per-metric mean / median / sample standard deviation.
std::string summary_csv(const std::vector<EnsembleRow>& rows);

}  // namespace sparse_exchange::experiments

#endif  // SPARSE_EXCHANGE_EXPERIMENTS_HPP
