#include "sparse_exchange/io.hpp"

#include "sparse_exchange/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace sparse_exchange::io {

using nlohmann::json;

namespace {

int line_at_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Best-effort line of the first occurrence of "key" in the source text.
int line_of_key(std::string_view text, std::string_view key) {
  if (key.empty()) return 0;
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  return pos == std::string_view::npos ? 0 : line_at_offset(text, pos);
}

class Reader {
 public:
  Reader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  json parse() const {
    try {
      return json::parse(text_.begin(), text_.end());
    } catch (const json::parse_error& e) {
      throw ParseError(source_, line_at_offset(text_, e.byte == 0 ? 0 : e.byte - 1),
                       "malformed JSON: " + std::string(e.what()));
    }
  }

  [[noreturn]] void fail(std::string_view key, const std::string& message) const {
    throw ParseError(source_, line_of_key(text_, key), message);
  }

  void only_keys(const json& obj, std::string_view where,
                 std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(where, std::string(where) + " must be an object");
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        fail(key, "unknown key '" + key + "' in " + std::string(where));
    }
  }

  double number(const json& obj, std::string_view key) const {
    const auto& v = obj.at(std::string(key));
    if (!v.is_number()) fail(key, "'" + std::string(key) + "' must be a number");
    return v.get<double>();
  }

  std::int64_t integer(const json& obj, std::string_view key) const {
    const auto& v = obj.at(std::string(key));
    if (!v.is_number_integer()) fail(key, "'" + std::string(key) + "' must be an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t seed(const json& obj, std::string_view key) const {
    const auto& v = obj.at(std::string(key));
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(key, "'" + std::string(key) + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const json& obj, std::string_view key) const {
    const auto& v = obj.at(std::string(key));
    if (!v.is_string()) fail(key, "'" + std::string(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json& v, std::string_view key) const {
    if (!v.is_array()) fail(key, "'" + std::string(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "'" + std::string(key) + "' must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  std::string_view text_;
  std::string source_;
};

json matrix_json(const MatrixXd& x) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json params_json(const SparsityParams& p) { return {{"c", p.c}, {"eps", p.eps}, {"tau", p.tau}}; }

}  // namespace

ParseError::ParseError(std::string source, int line, const std::string& message)
    : Error(source + ":" + (line > 0 ? std::to_string(line) + ":" : std::string()) + " " + message),
      source_(std::move(source)),
      line_(line) {}

ScenarioSpec parse_scenario(std::string_view text, const std::string& source) {
  const Reader rd(text, source);
  const json root = rd.parse();
  rd.only_keys(root, "scenario",
               {"schema_version", "n", "endowments", "init", "algorithm", "params", "run"});
  if (!root.contains("schema_version")) rd.fail("", "missing 'schema_version'");
  if (rd.integer(root, "schema_version") != kScenarioSchemaVersion)
    rd.fail("schema_version", "unsupported schema_version (expected " +
                                  std::to_string(kScenarioSchemaVersion) + ")");

  ScenarioSpec spec;
  if (!root.contains("endowments")) rd.fail("", "missing 'endowments'");
  const json& endow = root.at("endowments");
  rd.only_keys(endow, "endowments", {"explicit", "lognormal"});
  if (endow.size() != 1) rd.fail("endowments", "'endowments' needs exactly one of explicit, lognormal");
  if (endow.contains("explicit")) {
    auto values = rd.numbers(endow.at("explicit"), "explicit");
    spec.n = static_cast<int>(values.size());
    spec.endowments = std::move(values);
    if (root.contains("n") && rd.integer(root, "n") != spec.n)
      rd.fail("n", "'n' disagrees with the number of explicit endowments");
  } else {
    const json& ln = endow.at("lognormal");
    rd.only_keys(ln, "lognormal", {"mu_log", "sigma_sq", "seed"});
    LognormalEndowments dist;
    if (ln.contains("mu_log")) dist.mu_log = rd.number(ln, "mu_log");
    if (ln.contains("sigma_sq")) dist.sigma_sq = rd.number(ln, "sigma_sq");
    if (ln.contains("seed")) dist.seed = rd.seed(ln, "seed");
    spec.endowments = dist;
    if (!root.contains("n")) rd.fail("lognormal", "lognormal endowments need 'n'");
    spec.n = static_cast<int>(rd.integer(root, "n"));
  }

  if (root.contains("init")) {
    const json& init = root.at("init");
    rd.only_keys(init, "init", {"mode", "seed"});
    const std::string mode = init.contains("mode") ? rd.string(init, "mode") : "equal";
    if (mode == "equal") {
      if (init.contains("seed")) rd.fail("seed", "equal init takes no seed");
      spec.init = InitSpec::equal();
    } else if (mode == "random") {
      spec.init = InitSpec::random(init.contains("seed") ? rd.seed(init, "seed") : 0);
    } else {
      rd.fail("mode", "init mode must be 'equal' or 'random'");
    }
  }

  if (root.contains("algorithm")) {
    const auto alg = parse_algorithm(rd.string(root, "algorithm"));
    if (!alg) rd.fail("algorithm", "algorithm must be one of pr, sparse, egsparse");
    spec.run.algorithm = *alg;
  }

  if (root.contains("params")) {
    const json& p = root.at("params");
    rd.only_keys(p, "params", {"c", "eps", "tau"});
    if (p.contains("c")) spec.run.params.c = rd.number(p, "c");
    if (p.contains("eps")) spec.run.params.eps = rd.number(p, "eps");
    if (p.contains("tau")) spec.run.params.tau = rd.number(p, "tau");
  }

  if (root.contains("run")) {
    const json& r = root.at("run");
    rd.only_keys(r, "run", {"max_iters", "conv_tol", "record_every"});
    if (r.contains("max_iters")) spec.run.max_iters = rd.integer(r, "max_iters");
    if (r.contains("conv_tol")) spec.run.conv_tol = rd.number(r, "conv_tol");
    if (r.contains("record_every")) spec.run.record_every = rd.integer(r, "record_every");
  }

  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw ParseError(source, 0, e.what());
  }
  return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path), path.string());
}

json scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["n"] = spec.n;
  if (const auto* explicit_a = std::get_if<std::vector<double>>(&spec.endowments)) {
    j["endowments"] = {{"explicit", *explicit_a}};
  } else {
    const auto& ln = std::get<LognormalEndowments>(spec.endowments);
    j["endowments"] = {{"lognormal", {{"mu_log", ln.mu_log}, {"sigma_sq", ln.sigma_sq}, {"seed", ln.seed}}}};
  }
  if (spec.init.mode == InitMode::Equal)
    j["init"] = {{"mode", "equal"}};
  else
    j["init"] = {{"mode", "random"}, {"seed", spec.init.seed}};
  j["algorithm"] = std::string(to_string(spec.run.algorithm));
  j["params"] = params_json(spec.run.params);
  j["run"] = {{"max_iters", spec.run.max_iters},
              {"conv_tol", spec.run.conv_tol},
              {"record_every", spec.run.record_every}};
  return j;
}

std::vector<double> parse_endowments(std::string_view text, const std::string& source) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw ParseError(source, 1, "empty endowments file");
  std::vector<double> values;
  if (text[first] == '[' || text[first] == '{') {
    const Reader rd(text, source);
    const json root = rd.parse();
    if (root.is_object()) {
      rd.only_keys(root, "endowments file", {"endowments"});
      if (!root.contains("endowments")) rd.fail("", "missing 'endowments'");
      values = rd.numbers(root.at("endowments"), "endowments");
    } else {
      values = rd.numbers(root, "endowments");
    }
  } else {
    std::string token;
    int line = 1;
    auto flush = [&] {
      if (token.empty()) return;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size())
        throw ParseError(source, line, "not a number: '" + token + "'");
      values.push_back(v);
      token.clear();
    };
    for (char ch : text) {
      if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == ',') {
        flush();
        if (ch == '\n') ++line;
      } else {
        token.push_back(ch);
      }
    }
    flush();
  }
  if (values.size() < 2) throw ParseError(source, 0, "need at least 2 endowments");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw ParseError(source, 0, "endowments must be positive");
  return values;
}

std::vector<double> load_endowments(const std::filesystem::path& path) {
  return parse_endowments(read_file(path), path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& m : records) {
    out += std::to_string(m.t) + ',' + std::to_string(m.cardinality) + ',' +
           std::to_string(m.reciprocity) + ',' + format_double(m.min_ratio) + ',' +
           format_double(m.d_ra) + ',' + format_double(m.d_ar) + ',' +
           format_double(m.step_delta) + '\n';
  }
  return out;
}

std::string allocation_json(const ScenarioSpec& spec, const RunResult<double>& result) {
  const auto& state = result.final_state;
  json j;
  j["schema_version"] = 1;
  j["algorithm"] = std::string(to_string(spec.run.algorithm));
  j["t"] = state.t;
  j["converged"] = result.converged;
  j["endowments"] = std::vector<double>(state.a.values().data(),
                                        state.a.values().data() + state.a.size());
  j["allocation"] = matrix_json(state.x.values());
  j["params"] = params_json(spec.run.params);
  json seeds;
  if (const auto* ln = std::get_if<LognormalEndowments>(&spec.endowments))
    seeds["endowments"] = ln->seed;
  else
    seeds["endowments"] = nullptr;
  if (spec.init.mode == InitMode::Random)
    seeds["init"] = spec.init.seed;
  else
    seeds["init"] = nullptr;
  j["seed"] = seeds;
  j["scenario"] = scenario_to_json(spec);
  return j.dump(2) + "\n";
}

LoadedAllocation parse_allocation_json(std::string_view text, const std::string& source) {
  const Reader rd(text, source);
  const json root = rd.parse();
  try {
    LoadedAllocation out;
    const auto a = rd.numbers(root.at("endowments"), "endowments");
    const json& rows = root.at("allocation");
    const auto n = static_cast<Eigen::Index>(a.size());
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n)
      rd.fail("allocation", "allocation must be an N x N array");
    MatrixXd x(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = rd.numbers(rows.at(static_cast<std::size_t>(i)), "allocation");
      if (static_cast<Eigen::Index>(row.size()) != n) rd.fail("allocation", "allocation row has wrong length");
      for (Eigen::Index j = 0; j < n; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
    }
    const json& p = root.at("params");
    out.params.c = rd.number(p, "c");
    out.params.eps = rd.number(p, "eps");
    out.params.tau = rd.number(p, "tau");
    if (const auto alg = parse_algorithm(rd.string(root, "algorithm"))) out.algorithm = *alg;
    out.state = MarketState<double>(AllocationMatrix<double>(std::move(x)),
                                    EndowmentVector<double>(Eigen::Map<const VectorXd>(a.data(), n)),
                                    rd.integer(root, "t"));
    return out;
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("invalid allocation file: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(source, 0, std::string("invalid allocation file: ") + e.what());
  }
}

std::string graph_dot(const MarketState<double>& state, double tau) {
  const auto& x = state.x.values();
  const auto mask = link_mask(x, state.a.values(), tau);
  std::ostringstream out;
  char buf[64];
  out << "digraph exchange {\n  node [shape=circle];\n";
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f", state.a(i));
    out << "  p" << i + 1 << " [label=\"" << buf << "\"];\n";
  }
  for (Eigen::Index j = 0; j < state.size(); ++j) {
    for (Eigen::Index i = 0; i < state.size(); ++i) {
      if (!mask(i, j)) continue;
      std::snprintf(buf, sizeof(buf), "%.2f", x(i, j));
      out << "  p" << j + 1 << " -> p" << i + 1 << " [label=\"" << buf << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sparse_exchange::io
