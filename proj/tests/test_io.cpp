#include "sparse_exchange/experiments.hpp"
#include "sparse_exchange/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

using namespace sparse_exchange;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sparse_exchange_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

constexpr const char* kScenario = R"({
  "schema_version": 1,
  "n": 6,
  "endowments": {"lognormal": {"mu_log": 4.5, "sigma_sq": 0.25, "seed": 3}},
  "init": {"mode": "random", "seed": 9},
  "algorithm": "sparse",
  "params": {"c": 0.1, "eps": 0.01, "tau": 0.01},
  "run": {"max_iters": 300, "conv_tol": 1e-10, "record_every": 50}
}
)";

std::string parse_error_of(const std::string& text) {
  try {
    io::parse_scenario(text, "case.json");
  } catch (const io::ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("scenario parsing") {
    const auto spec = io::parse_scenario(kScenario);
    CHECK(spec.n == 6);
    CHECK(spec.init.mode == InitMode::Random);
    CHECK(spec.init.seed == 9);
    CHECK(spec.run.max_iters == 300);
    CHECK(spec.run.record_every == 50);
    REQUIRE(std::holds_alternative<LognormalEndowments>(spec.endowments));
    CHECK(std::get<LognormalEndowments>(spec.endowments).seed == 3);

    const auto again = io::parse_scenario(io::scenario_to_json(spec).dump());
    CHECK(io::scenario_to_json(again) == io::scenario_to_json(spec));

    const auto minimal = io::parse_scenario(R"({"schema_version": 1, "endowments": {"explicit": [1, 2, 3]}})");
    CHECK(minimal.n == 3);
    CHECK(minimal.init.mode == InitMode::Equal);
    CHECK(minimal.run.algorithm == Algorithm::SPARSE);
  }

  TEST_CASE("scenario errors name the file and line") {
    std::string text = kScenario;
    text.replace(text.find("\"tau\""), 5, "\"tua\"");
    const std::string unknown = parse_error_of(text);
    CHECK(unknown.rfind("case.json:7:", 0) == 0);
    CHECK(unknown.find("tua") != std::string::npos);

    const std::string syntax = parse_error_of("{\n  \"schema_version\": 1,\n  \"n\": ,\n}");
    CHECK(syntax.rfind("case.json:3:", 0) == 0);

    CHECK(parse_error_of(R"({"schema_version": 2, "endowments": {"explicit": [1, 1]}})").find("schema_version") !=
          std::string::npos);
    CHECK_FALSE(parse_error_of(R"({"schema_version": 1, "endowments": {"explicit": [1, 1]}, "algorithm": "bogus"})").empty());
    CHECK_FALSE(parse_error_of(R"({"schema_version": 1, "n": 3, "endowments": {"explicit": [1, 1]}})").empty());
    CHECK_FALSE(parse_error_of(R"({"schema_version": 1, "endowments": {"explicit": [1, -1]}})").empty());
  }

  TEST_CASE("endowment files") {
    CHECK(io::parse_endowments("[1, 2, 3]") == std::vector<double>{1, 2, 3});
    CHECK(io::parse_endowments(R"({"endowments": [1.5, 2]})") == std::vector<double>{1.5, 2});
    CHECK(io::parse_endowments("1 2,3\n4") == std::vector<double>{1, 2, 3, 4});
    CHECK_THROWS_AS(io::parse_endowments("1 two"), io::ParseError);
    CHECK_THROWS_AS(io::parse_endowments("1"), io::ParseError);
  }

  TEST_CASE("doubles are written to round-trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 102.0, 5e-324}) {
      const std::string s = io::format_double(v);
      CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(io::format_double(1.0) == "1");
  }

  TEST_CASE("run writes metrics, allocation and graph") {
    const fs::path dir = scratch_dir("run");
    const auto spec = io::parse_scenario(kScenario);
    const auto result = experiments::cmd_run(spec, dir);

    const auto metrics = lines(io::read_file(dir / "metrics.csv"));
    REQUIRE(metrics.size() == result.records.size() + 1);
    CHECK(metrics[0] == io::kMetricsHeader);
    CHECK(metrics[1].rfind("0,", 0) == 0);
    CHECK(metrics.size() == 8);  // t = 0, 50, ..., 300

    // Reloading the allocation reproduces the final metrics exactly.
    const auto loaded = io::parse_allocation_json(io::read_file(dir / "allocation.json"));
    CHECK((loaded.state.x.values().array() == result.final_state.x.values().array()).all());
    CHECK((loaded.state.a.values().array() == result.final_state.a.values().array()).all());
    CHECK(loaded.state.t == result.final_state.t);
    const auto m = measure(loaded.state, loaded.params.tau);
    const auto& r = result.records.back();
    CHECK(m.cardinality == r.cardinality);
    CHECK(m.reciprocity == r.reciprocity);
    CHECK(m.min_ratio == r.min_ratio);
    CHECK(m.d_ra == r.d_ra);
    CHECK(m.d_ar == r.d_ar);

    const std::string dot = io::read_file(dir / "graph.dot");
    CHECK(dot.rfind("digraph", 0) == 0);
    const std::regex edge(R"(p\d+ -> p\d+)");
    const auto edges = std::distance(std::sregex_iterator(dot.begin(), dot.end(), edge), std::sregex_iterator());
    CHECK(edges == r.cardinality);
    CHECK(dot.back() == '\n');
  }

  TEST_CASE("ensemble of one matches a single run") {
    const fs::path dir = scratch_dir("ensemble1");
    auto spec = io::parse_scenario(kScenario);
    const auto rows = experiments::cmd_ensemble(spec, 1, 9, 1, dir);
    REQUIRE(rows.size() == 1);
    spec.init = InitSpec::random(9);
    const auto single = run_scenario(spec).records.back();
    CHECK(rows[0].final_metrics.cardinality == single.cardinality);
    CHECK(rows[0].final_metrics.d_ra == single.d_ra);

    const auto table = lines(io::read_file(dir / "ensemble.csv"));
    REQUIRE(table.size() == 2);
    CHECK(table[0] == experiments::kEnsembleHeader);
    CHECK(table[1] == "9," + std::to_string(single.cardinality) + ',' +
                          std::to_string(single.reciprocity) + ',' + io::format_double(single.min_ratio) +
                          ',' + io::format_double(single.d_ra));
    const auto summary = lines(io::read_file(dir / "summary.csv"));
    CHECK(summary[0] == experiments::kSummaryHeader);
    CHECK(summary.size() == 5);
    CHECK_FALSE(fs::exists(dir / "errors.csv"));
  }

  TEST_CASE("ensemble output does not depend on the thread count") {
    const auto spec = io::parse_scenario(kScenario);
    const fs::path one = scratch_dir("ensemble_j1");
    const fs::path four = scratch_dir("ensemble_j4");
    experiments::cmd_ensemble(spec, 6, 100, 1, one);
    experiments::cmd_ensemble(spec, 6, 100, 4, four);
    CHECK(io::read_file(one / "ensemble.csv") == io::read_file(four / "ensemble.csv"));
    CHECK(io::read_file(one / "summary.csv") == io::read_file(four / "summary.csv"));
  }

  TEST_CASE("failed ensemble runs are recorded") {
    auto spec = io::parse_scenario(kScenario);
    spec.run.algorithm = Algorithm::EGSPARSE;
    spec.run.params.c = 1e6;  // penalties far beyond the budget bracket
    const fs::path dir = scratch_dir("ensemble_err");
    const auto rows = experiments::cmd_ensemble(spec, 2, 0, 1, dir);
    const bool any_failed = !rows[0].ok || !rows[1].ok;
    CHECK(fs::exists(dir / "errors.csv") == any_failed);
    CHECK(fs::exists(dir / "ensemble.csv"));
  }

  TEST_CASE("sweep without penalty reaches proportional fairness") {
    auto spec = io::parse_scenario(kScenario);
    spec.run.max_iters = 20000;
    spec.run.record_every = 1000;
    const fs::path dir = scratch_dir("sweep");
    const auto rows = experiments::cmd_sweep(spec, {0.0, 0.2}, dir);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].final_metrics.d_ra <= 1e-6);
    CHECK(rows[1].final_metrics.cardinality < rows[0].final_metrics.cardinality);
    const auto table = lines(io::read_file(dir / "sweep.csv"));
    REQUIRE(table.size() == 3);
    CHECK(table[0] == experiments::kSweepHeader);
    CHECK(table[1].rfind("0,", 0) == 0);
    CHECK(table[2].rfind("0.2,", 0) == 0);
  }

  TEST_CASE("solve writes a structured solution") {
    const fs::path dir = scratch_dir("solve");
    auto out = experiments::cmd_solve({1, 1, 1, 1}, 1.0, experiments::Method::P0, dir);
    CHECK(out["status"] == "solved");
    CHECK(out["cardinality"] == 4);
    CHECK(out["residuals"]["theta_shortfall"].get<double>() <= 1e-9);
    const auto reread = nlohmann::json::parse(io::read_file(dir / "solution.json"));
    CHECK(reread == out);

    for (auto method : {experiments::Method::P0, experiments::Method::P1, experiments::Method::P2}) {
      out = experiments::cmd_solve({1, 1}, 1.0, method, dir);
      CHECK(out["cardinality"] == 2);
    }
    out = experiments::cmd_solve({1, 1, 1, 1}, 1.0, experiments::Method::P1, dir);
    CHECK(out.contains("objective_trace"));
    CHECK(out.contains("outer_iterations"));

    out = experiments::cmd_solve({10, 1, 1}, 1.0, experiments::Method::P2, dir);
    CHECK(out["status"] == "infeasible");
    CHECK(out.contains("message"));

    CHECK(experiments::parse_method("p1") == experiments::Method::P1);
    CHECK_FALSE(experiments::parse_method("p3").has_value());
  }
}
