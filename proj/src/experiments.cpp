#include "sparse_exchange/experiments.hpp"

#include "sparse_exchange/core.hpp"
#include "sparse_exchange/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace sparse_exchange::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunResult<double> cmd_run(const ScenarioSpec& spec, const fs::path& out_dir) {
  auto result = run_scenario(spec);
  ensure_dir(out_dir);
  io::write_file_atomic(out_dir / "metrics.csv", io::metrics_csv(result.records));
  io::write_file_atomic(out_dir / "allocation.json", io::allocation_json(spec, result));
  io::write_file_atomic(out_dir / "graph.dot", io::graph_dot(result.final_state, spec.run.params.tau));
  return result;
}

std::string summary_csv(const std::vector<EnsembleRow>& rows) {
  std::vector<double> card, recip, ratio, dra;
  for (const auto& r : rows) {
    if (!r.ok) continue;
    card.push_back(r.final_metrics.cardinality);
    recip.push_back(r.final_metrics.reciprocity);
    ratio.push_back(r.final_metrics.min_ratio);
    dra.push_back(r.final_metrics.d_ra);
  }
  std::string out(kSummaryHeader);
  out += '\n';
  auto line = [&](const char* name, const std::vector<double>& v) {
    if (v.empty()) {
      out += std::string(name) + ",nan,nan,nan\n";
      return;
    }
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    out += std::string(name) + ',' + io::format_double(mean) + ',' + io::format_double(median(v)) +
           ',' + io::format_double(sd) + '\n';
  };
  line("cardinality", card);
  line("reciprocity", recip);
  line("min_ratio", ratio);
  line("d_ra", dra);
  return out;
}

std::vector<EnsembleRow> cmd_ensemble(const ScenarioSpec& spec, int runs, std::uint64_t seed0,
                                      int jobs, const fs::path& out_dir) {
  if (runs < 1) throw DomainError("ensemble: runs must be >= 1");
  spec.validate();
  std::vector<EnsembleRow> rows(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < runs; k = next++) {
      auto& row = rows[static_cast<std::size_t>(k)];
      row.seed = seed0 + static_cast<std::uint64_t>(k);
      ScenarioSpec one = spec;
      one.init = InitSpec::random(row.seed);
      try {
        row.final_metrics = run_scenario(one).records.back();
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, runs);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::string table(kEnsembleHeader);
  table += '\n';
  std::string errors = "seed,error\n";
  bool any_error = false;
  for (const auto& r : rows) {
    if (!r.ok) {
      any_error = true;
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      errors += std::to_string(r.seed) + ",\"" + msg + "\"\n";
      continue;
    }
    table += std::to_string(r.seed) + ',' + std::to_string(r.final_metrics.cardinality) + ',' +
             std::to_string(r.final_metrics.reciprocity) + ',' +
             io::format_double(r.final_metrics.min_ratio) + ',' +
             io::format_double(r.final_metrics.d_ra) + '\n';
  }
  ensure_dir(out_dir);
  io::write_file_atomic(out_dir / "ensemble.csv", table);
  io::write_file_atomic(out_dir / "summary.csv", summary_csv(rows));
  if (any_error) io::write_file_atomic(out_dir / "errors.csv", errors);
  return rows;
}

std::vector<SweepRow> cmd_sweep(const ScenarioSpec& spec, const std::vector<double>& c_values,
                                const fs::path& out_dir) {
  if (c_values.empty()) throw DomainError("sweep: c list is empty");
  std::vector<SweepRow> rows;
  std::string table(kSweepHeader);
  table += '\n';
  for (double c : c_values) {
    ScenarioSpec one = spec;
    one.run.params.c = c;
    const auto result = run_scenario(one);
    SweepRow row{c, result.records.back(), result.final_state.t};
    table += io::format_double(c) + ',' + std::to_string(row.final_metrics.cardinality) + ',' +
             io::format_double(row.final_metrics.d_ra) + ',' +
             io::format_double(row.final_metrics.min_ratio) + ',' + std::to_string(row.iterations) +
             '\n';
    rows.push_back(row);
  }
  ensure_dir(out_dir);
  io::write_file_atomic(out_dir / "sweep.csv", table);
  return rows;
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "p0") return Method::P0;
  if (name == "p1") return Method::P1;
  if (name == "p2") return Method::P2;
  return std::nullopt;
}

json cmd_solve(const std::vector<double>& endowments, double theta, Method method,
               const fs::path& out_dir, const SolveOptions& options) {
  const char* method_name = method == Method::P0 ? "p0" : method == Method::P1 ? "p1" : "p2";
  json out;
  out["method"] = method_name;
  out["theta"] = theta;
  out["endowments"] = endowments;
  try {
    const EndowmentVector<double> a(
        Eigen::Map<const VectorXd>(endowments.data(), static_cast<Eigen::Index>(endowments.size())));
    const central::ReciprocityTarget target(theta);
    MatrixXd x;
    std::optional<int> exact_cardinality;
    switch (method) {
      case Method::P0: {
        auto res = central::p0_brute_force(a, target, options.p0_max_n);
        x = res.witness.values();
        exact_cardinality = res.cardinality;
        if (res.warning) out["warning"] = *res.warning;
        break;
      }
      case Method::P1: {
        central::P1Options p1;
        p1.perturbation_seed = options.seed;
        auto res = central::p1_reweighted_lp(a, target, p1);
        x = res.x.values();
        out["objective_trace"] = res.objective_trace;
        out["outer_iterations"] = res.outer_iterations;
        out["converged"] = res.converged;
        break;
      }
      case Method::P2: {
        central::P2Params p2;
        if (options.seed) p2.seed = *options.seed;
        auto res = central::p2_irls(a, target, p2);
        x = res.x.values();
        out["objective_trace"] = res.objective_trace;
        out["outer_iterations"] = res.outer_iterations;
        out["converged"] = res.converged;
        break;
      }
    }
    out["status"] = "solved";
    // P0 reports its exact support size; the heuristics report tau-links.
    out["cardinality"] = exact_cardinality ? *exact_cardinality : cardinality(x, a.values(), options.tau);
    json rows = json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
      rows.push_back(row);
    }
    out["witness"] = rows;
    const double min_ratio = min_exchange_ratio(x, a.values());
    out["residuals"] = {{"max_column_residual", column_residual(x, a.values())},
                        {"min_ratio", min_ratio},
                        {"theta_shortfall", std::max(0.0, theta - min_ratio)}};
  } catch (const InfeasibleError& e) {
    out["status"] = "infeasible";
    out["message"] = e.what();
  }
  ensure_dir(out_dir);
  io::write_file_atomic(out_dir / "solution.json", out.dump(2) + "\n");
  return out;
}

}  // namespace sparse_exchange::experiments
