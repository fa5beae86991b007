// Command-line harness: run, ensemble, sweep, solve.

#include "sparse_exchange/experiments.hpp"
#include "sparse_exchange/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace se = sparse_exchange;

namespace {

std::vector<double> parse_c_grid(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw se::DomainError("bad --c-grid entry '" + item + "'");
    values.push_back(v);
  }
  return values;
}

void print_final(const se::MetricsRecord& m) {
  std::cout << "t=" << m.t << " cardinality=" << m.cardinality << " reciprocity=" << m.reciprocity
            << " min_ratio=" << m.min_ratio << " d_ra=" << m.d_ra << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse resource-exchange network formation"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";

  auto* run = app.add_subcommand("run", "Run one scenario; writes metrics.csv, allocation.json, graph.dot");
  run->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");

  int runs = 1;
  std::uint64_t seed0 = 0;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* ensemble = app.add_subcommand("ensemble", "Random-init runs over consecutive seeds");
  ensemble->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  ensemble->add_option("--out", out_dir, "Output directory");
  ensemble->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  ensemble->add_option("--seed", seed0, "First init seed");
  ensemble->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  std::string c_grid;
  auto* sweep = app.add_subcommand("sweep", "One run per penalty weight c; writes sweep.csv");
  sweep->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--c-grid", c_grid, "Comma-separated c values")->required();

  std::string endowments_path;
  double theta = 1.0;
  std::string method_name = "p0";
  std::uint64_t solve_seed = 0;
  auto* solve = app.add_subcommand("solve", "Centralized sparsest allocation; writes solution.json");
  solve->add_option("--endowments", endowments_path, "Endowments file")->required()->check(CLI::ExistingFile);
  solve->add_option("--theta", theta, "Minimum exchange ratio in (0, 1]");
  solve->add_option("--method", method_name, "p0 | p1 | p2")
      ->check(CLI::IsMember({"p0", "p1", "p2"}));
  auto* solve_seed_opt = solve->add_option("--seed", solve_seed, "P1 perturbation / P2 start seed");
  solve->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto spec = se::io::load_scenario(scenario_path);
      const auto result = se::experiments::cmd_run(spec, out_dir);
      print_final(result.records.back());
    } else if (*ensemble) {
      const auto spec = se::io::load_scenario(scenario_path);
      const auto rows = se::experiments::cmd_ensemble(spec, runs, seed0, jobs, out_dir);
      int failed = 0;
      for (const auto& r : rows) failed += r.ok ? 0 : 1;
      std::cout << rows.size() - static_cast<std::size_t>(failed) << " runs ok, " << failed
                << " failed\n"
                << se::experiments::summary_csv(rows);
    } else if (*sweep) {
      const auto spec = se::io::load_scenario(scenario_path);
      for (const auto& row : se::experiments::cmd_sweep(spec, parse_c_grid(c_grid), out_dir)) {
        std::cout << "c=" << row.c << " ";
        print_final(row.final_metrics);
      }
    } else if (*solve) {
      const auto a = se::io::load_endowments(endowments_path);
      se::experiments::SolveOptions options;
      if (solve_seed_opt->count() > 0) options.seed = solve_seed;
      options.p0_max_n = 5;
      const auto method = *se::experiments::parse_method(method_name);
      if (method == se::experiments::Method::P0 && a.size() == 5)
        std::cerr << "warning: exhaustive search over 2^20 supports for N = 5\n";
      const auto out = se::experiments::cmd_solve(a, theta, method, out_dir, options);
      std::cout << out["status"].get<std::string>();
      if (out.contains("cardinality")) std::cout << " cardinality=" << out["cardinality"];
      std::cout << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
