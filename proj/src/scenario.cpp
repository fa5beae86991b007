#include "sparse_exchange/scenario.hpp"

#include "sparse_exchange/random.hpp"

#include <cmath>
#include <string>

namespace sparse_exchange {

EndowmentVector<double> sample_endowments(int n, double mu_log, double sigma_sq, std::uint64_t seed) {
  if (n < 2) throw DomainError("sample_endowments: n must be >= 2");
  if (!(sigma_sq > 0.0)) throw DomainError("sample_endowments: sigma_sq must be > 0");
  if (!std::isfinite(mu_log)) throw DomainError("sample_endowments: mu_log must be finite");
  Rng rng(seed);
  const double sigma = std::sqrt(sigma_sq);
  VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = std::exp(rng.normal(mu_log, sigma));
  return EndowmentVector<double>(std::move(a));
}

AllocationMatrix<double> init_allocation(const EndowmentVector<double>& a, const InitSpec& init) {
  const Eigen::Index n = a.size();
  MatrixXd x = MatrixXd::Zero(n, n);
  if (init.mode == InitMode::Equal) {
    for (Eigen::Index j = 0; j < n; ++j) x.col(j).setConstant(a(j) / static_cast<double>(n - 1));
  } else {
    Rng rng(init.seed);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) x(i, j) = rng.uniform_open_low();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    x(j, j) = 0.0;
    x.col(j) *= a(j) / x.col(j).sum();
  }
  return AllocationMatrix<double>(std::move(x));
}

void ScenarioSpec::validate() const {
  if (n < 2) throw DomainError("scenario: n must be >= 2");
  if (const auto* explicit_a = std::get_if<std::vector<double>>(&endowments)) {
    if (static_cast<int>(explicit_a->size()) != n)
      throw DomainError("scenario: " + std::to_string(explicit_a->size()) +
                        " explicit endowments for n = " + std::to_string(n));
    for (double v : *explicit_a)
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("scenario: endowments must be positive");
  } else {
    const auto& ln = std::get<LognormalEndowments>(endowments);
    if (!(ln.sigma_sq > 0.0)) throw DomainError("scenario: lognormal sigma_sq must be > 0");
  }
  run.validate();
}

EndowmentVector<double> ScenarioSpec::endowment_vector() const {
  validate();
  if (const auto* explicit_a = std::get_if<std::vector<double>>(&endowments))
    return EndowmentVector<double>(Eigen::Map<const VectorXd>(explicit_a->data(), n));
  const auto& ln = std::get<LognormalEndowments>(endowments);
  return sample_endowments(n, ln.mu_log, ln.sigma_sq, ln.seed);
}

MarketState<double> ScenarioSpec::initial_state() const {
  auto a = endowment_vector();
  auto x = init_allocation(a, init);
  return MarketState<double>(std::move(x), std::move(a), 0);
}

RunResult<double> run_scenario(const ScenarioSpec& spec) {
  return run(spec.initial_state(), spec.run);
}

}  // namespace sparse_exchange
