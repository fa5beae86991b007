#ifndef SPARSE_EXCHANGE_SCENARIO_HPP
#define SPARSE_EXCHANGE_SCENARIO_HPP

#include "sparse_exchange/dynamics.hpp"
#include "sparse_exchange/types.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace sparse_exchange {

/// a_i = exp(z_i), z_i ~ Normal(mu_log, sigma_sq) iid.
EndowmentVector<double> sample_endowments(int n, double mu_log, double sigma_sq, std::uint64_t seed);

enum class InitMode { Equal, Random };

struct InitSpec {
  InitMode mode = InitMode::Equal;
  std::uint64_t seed = 0;  // used by Random only

  static InitSpec equal() { return {InitMode::Equal, 0}; }
  static InitSpec random(std::uint64_t seed) { return {InitMode::Random, seed}; }
};

/// Equal: X(i, j) = a_j / (N - 1). Random: each column holds iid uniforms
/// on (0, 1] rescaled to sum to a_j.
AllocationMatrix<double> init_allocation(const EndowmentVector<double>& a, const InitSpec& init);

struct LognormalEndowments {
  double mu_log = 4.5;
  double sigma_sq = 0.25;
  std::uint64_t seed = 0;
};

/// Everything that determines a run.
struct ScenarioSpec {
  int n = 0;
  std::variant<std::vector<double>, LognormalEndowments> endowments;
  InitSpec init;
  RunConfig run;

  void validate() const;
  EndowmentVector<double> endowment_vector() const;
  MarketState<double> initial_state() const;
};

RunResult<double> run_scenario(const ScenarioSpec& spec);

}  // namespace sparse_exchange

#endif  // SPARSE_EXCHANGE_SCENARIO_HPP
