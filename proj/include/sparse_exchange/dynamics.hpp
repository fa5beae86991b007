#ifndef SPARSE_EXCHANGE_DYNAMICS_HPP
#define SPARSE_EXCHANGE_DYNAMICS_HPP

// Decentralized step rules. All rules are synchronous: every peer reads
// X(t) and the whole matrix X(t+1) is committed at once.
//
// Orientation reminder: X(i, j) is what peer j gives to peer i. A peer's
// own decisions therefore live in its column; what it receives lives in
// its row.

#include "sparse_exchange/core.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sparse_exchange {

/// mu(j, i): per-unit price peer i charges peer j.
template <typename Scalar>
using PriceMatrix = Matrix<Scalar>;
/// b(i, j): bid of peer j for peer i's resource.
template <typename Scalar>
using BidMatrix = Matrix<Scalar>;
/// lambda(i): budget multiplier of peer i.
template <typename Scalar>
using MultiplierVector = Vector<Scalar>;

enum class Algorithm { PR, SPARSE, EGSPARSE };

inline std::string_view to_string(Algorithm alg) {
  switch (alg) {
    case Algorithm::PR: return "pr";
    case Algorithm::SPARSE: return "sparse";
    case Algorithm::EGSPARSE: return "egsparse";
  }
  return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name) {
  if (name == "pr") return Algorithm::PR;
  if (name == "sparse") return Algorithm::SPARSE;
  if (name == "egsparse") return Algorithm::EGSPARSE;
  return std::nullopt;
}

struct RunConfig {
  std::int64_t max_iters = 10000;
  double conv_tol = 1e-8;
  Algorithm algorithm = Algorithm::SPARSE;
  SparsityParams params;
  std::int64_t record_every = 1;

  void validate() const {
    if (max_iters < 1) throw DomainError("max_iters must be >= 1");
    if (!(conv_tol > 0.0)) throw DomainError("conv_tol must be > 0");
    if (record_every < 1) throw DomainError("record_every must be >= 1");
    params.validate();
  }
};

namespace detail {

// Exponents beyond this are handled in the log domain so that
// exp(-c / (eps + x)) never underflows to an exact zero.
inline constexpr double kLogDomainExponent = 700.0;

template <typename Scalar>
Vector<Scalar> positive_receipts(const MarketState<Scalar>& state, const char* who) {
  Vector<Scalar> r = receive_vector(state.x.values());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (!(r(i) > Scalar(0)))
      throw DegenerateStateError(std::string(who) + ": peer " + std::to_string(i) +
                                 " receives nothing");
  }
  return r;
}

template <typename Scalar>
Scalar penalty_weight(const SparsityParams& p, Scalar x) {
  return Scalar(p.c) / (Scalar(p.eps) + x);
}

}  // namespace detail

/// Standard proportional response (two-stage form):
///   x_ij(t+1) = a_j x_ij (a_i / r_i) / sum_{k != j} x_kj (a_k / r_k).
template <typename Scalar>
AllocationMatrix<Scalar> pr_step(const MarketState<Scalar>& state) {
  const auto& x = state.x.values();
  const auto& a = state.a.values();
  const Vector<Scalar> r = detail::positive_receipts(state, "pr_step");
  const Vector<Scalar> scale = a.cwiseQuotient(r);

  Matrix<Scalar> next = x.array().colwise() * scale.array();
  for (Eigen::Index j = 0; j < next.cols(); ++j) {
    next(j, j) = Scalar(0);
    const Scalar denom = next.col(j).sum();
    if (!(denom > Scalar(0)))
      throw DegenerateStateError("pr_step: peer " + std::to_string(j) +
                                 " gives only to peers that receive nothing");
    next.col(j) *= a(j) / denom;
  }
  return AllocationMatrix<Scalar>(std::move(next));
}

/// Nonlinear SPaRse prices mu(j, i) = (r_i / a_i) exp(c / (eps + x_ij)).
template <typename Scalar>
PriceMatrix<Scalar> sparse_prices(const MarketState<Scalar>& state, const SparsityParams& params) {
  params.validate();
  const auto& x = state.x.values();
  const Vector<Scalar> rho =
      detail::positive_receipts(state, "sparse_prices").cwiseQuotient(state.a.values());
  const Eigen::Index n = state.size();
  PriceMatrix<Scalar> mu = PriceMatrix<Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      mu(j, i) = rho(i) * std::exp(detail::penalty_weight(params, x(i, j)));
    }
  }
  return mu;
}

/// SPaRse bids b(i, j) = x_ji / mu(i, j).
template <typename Scalar>
BidMatrix<Scalar> sparse_bids(const MarketState<Scalar>& state, const SparsityParams& params) {
  const PriceMatrix<Scalar> mu = sparse_prices(state, params);
  const auto& x = state.x.values();
  const Eigen::Index n = state.size();
  BidMatrix<Scalar> b = BidMatrix<Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) b(i, j) = x(j, i) / mu(i, j);
  return b;
}

/// One SPaRse step via prices and bids: each peer i splits a_i in
/// proportion to the bids it receives, x_ji(t+1) = a_i b_ij / sum_k b_ik.
template <typename Scalar>
AllocationMatrix<Scalar> sparse_step(const MarketState<Scalar>& state, const SparsityParams& params) {
  params.validate();
  const auto& x = state.x.values();
  const auto& a = state.a.values();
  const Eigen::Index n = state.size();
  const Vector<Scalar> rho = detail::positive_receipts(state, "sparse_step").cwiseQuotient(a);

  Matrix<Scalar> next = Matrix<Scalar>::Zero(n, n);
  Vector<Scalar> bids(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar max_exponent(0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && x(j, i) > Scalar(0))
        max_exponent = std::max(max_exponent, detail::penalty_weight(params, x(j, i)));

    bids.setZero();
    if (max_exponent <= Scalar(detail::kLogDomainExponent)) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const Scalar price = rho(j) * std::exp(detail::penalty_weight(params, x(j, i)));
        bids(j) = x(j, i) / price;
      }
    } else {
      Scalar max_log = -std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || !(x(j, i) > Scalar(0))) continue;
        bids(j) = std::log(x(j, i)) - std::log(rho(j)) - detail::penalty_weight(params, x(j, i));
        max_log = std::max(max_log, bids(j));
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || !(x(j, i) > Scalar(0))) continue;
        bids(j) = std::exp(bids(j) - max_log);
      }
    }
    const Scalar total = bids.sum();
    if (!(total > Scalar(0)))
      throw DegenerateStateError("sparse_step: peer " + std::to_string(i) + " received no bids");
    next.col(i) = bids * (a(i) / total);
    next(i, i) = Scalar(0);
  }
  return AllocationMatrix<Scalar>(std::move(next));
}

/// The same SPaRse step computed as the multiplicative update
///   x_ij <- x_ij (a_i / r_i) exp(-c / (eps + x_ij))
/// followed by renormalizing each column to a_j.
template <typename Scalar>
AllocationMatrix<Scalar> sparse_step_multiplicative(const MarketState<Scalar>& state,
                                                    const SparsityParams& params) {
  params.validate();
  const auto& x = state.x.values();
  const auto& a = state.a.values();
  const Eigen::Index n = state.size();
  const Vector<Scalar> r = detail::positive_receipts(state, "sparse_step_multiplicative");

  Matrix<Scalar> next = Matrix<Scalar>::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // A column-constant factor cancels in the normalization. When even the
    // smallest exponent would underflow, shift the column by it.
    Scalar shift = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && x(i, j) > Scalar(0))
        shift = std::min(shift, detail::penalty_weight(params, x(i, j)));
    if (!(shift > Scalar(detail::kLogDomainExponent)) || !std::isfinite(static_cast<double>(shift)))
      shift = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      next(i, j) = x(i, j) * (a(i) / r(i)) *
                   std::exp(shift - detail::penalty_weight(params, x(i, j)));
    }
    const Scalar total = next.col(j).sum();
    if (!(total > Scalar(0)))
      throw DegenerateStateError("sparse_step_multiplicative: column " + std::to_string(j) +
                                 " vanished");
    next.col(j) *= a(j) / total;
  }
  return AllocationMatrix<Scalar>(std::move(next));
}

/// EGsPaRse bids of every peer j for peer i's resource at multiplier lambda_i:
///   b_ij = (x_ji / rho_j) / (lambda_i + c / (eps + x_ji)).
/// Entry i of the result is zero.
template <typename Scalar>
Vector<Scalar> egsparse_bids(const MarketState<Scalar>& state, const SparsityParams& params,
                             Scalar lambda_i, Eigen::Index i) {
  params.validate();
  const auto& x = state.x.values();
  const Eigen::Index n = state.size();
  if (i < 0 || i >= n) throw DomainError("egsparse_bids: peer index out of range");
  const Vector<Scalar> rho =
      detail::positive_receipts(state, "egsparse_bids").cwiseQuotient(state.a.values());
  Vector<Scalar> bids = Vector<Scalar>::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    const Scalar price = lambda_i + detail::penalty_weight(params, x(j, i));
    if (!(price > Scalar(0)))
      throw DomainError("egsparse_bids: lambda + w <= 0 for peer " + std::to_string(i));
    bids(j) = x(j, i) / rho(j) / price;
  }
  return bids;
}

namespace detail {

// Budget function of peer i, lambda -> sum_j b_ij(lambda), with the
// per-peer pieces precomputed. Continuous and strictly decreasing on
// (-min_j w_j, inf).
template <typename Scalar>
struct EgBudget {
  std::vector<Scalar> value;   // x_ji / rho_j
  std::vector<Scalar> weight;  // w(x_ji)

  Scalar operator()(Scalar lambda) const {
    Scalar total(0);
    for (std::size_t k = 0; k < value.size(); ++k) total += value[k] / (lambda + weight[k]);
    return total;
  }
};

template <typename Scalar>
EgBudget<Scalar> eg_budget(const MarketState<Scalar>& state, const SparsityParams& params,
                           const Vector<Scalar>& rho, Eigen::Index i) {
  const auto& x = state.x.values();
  EgBudget<Scalar> budget;
  for (Eigen::Index j = 0; j < state.size(); ++j) {
    if (j == i) continue;
    budget.value.push_back(x(j, i) / rho(j));
    budget.weight.push_back(penalty_weight(params, x(j, i)));
  }
  return budget;
}

template <typename Scalar>
Scalar solve_budget(const EgBudget<Scalar>& budget, Scalar target, Eigen::Index i) {
  bool any_positive = false;
  for (Scalar v : budget.value) any_positive = any_positive || v > Scalar(0);
  if (!any_positive)
    throw DegenerateStateError("solve_lambda: peer " + std::to_string(i) + " gives nothing");

  const Scalar w_min = *std::min_element(budget.weight.begin(), budget.weight.end());
  Scalar lo = -w_min + Scalar(1e-12) * std::max(Scalar(1), std::abs(w_min));
  if (!(lo + w_min > Scalar(0))) lo = std::nextafter(-w_min, std::numeric_limits<Scalar>::infinity());
  if (!(budget(lo) > target))
    throw BracketError("solve_lambda: budget unreachable near the pole for peer " +
                       std::to_string(i));

  Scalar hi = std::max(Scalar(1), lo + Scalar(1));
  int doublings = 0;
  while (budget(hi) > target) {
    if (++doublings > 200)
      throw BracketError("solve_lambda: no upper bracket for peer " + std::to_string(i));
    hi = lo + Scalar(2) * (hi - lo);
  }

  // Bisect down to adjacent floating-point values.
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    if (!(mid > lo && mid < hi)) break;
    if (budget(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return std::abs(budget(lo) - target) < std::abs(budget(hi) - target) ? lo : hi;
}

}  // namespace detail

/// Multiplier lambda_i at which peer i's EGsPaRse bids exhaust a_i.
template <typename Scalar>
Scalar solve_lambda(const MarketState<Scalar>& state, const SparsityParams& params,
                    Eigen::Index i) {
  params.validate();
  if (i < 0 || i >= state.size()) throw DomainError("solve_lambda: peer index out of range");
  const Vector<Scalar> rho =
      detail::positive_receipts(state, "solve_lambda").cwiseQuotient(state.a.values());
  return detail::solve_budget(detail::eg_budget(state, params, rho, i), state.a(i), i);
}

template <typename Scalar>
MultiplierVector<Scalar> egsparse_multipliers(const MarketState<Scalar>& state,
                                              const SparsityParams& params) {
  params.validate();
  const Vector<Scalar> rho =
      detail::positive_receipts(state, "egsparse_multipliers").cwiseQuotient(state.a.values());
  MultiplierVector<Scalar> lambda(state.size());
  for (Eigen::Index i = 0; i < state.size(); ++i)
    lambda(i) = detail::solve_budget(detail::eg_budget(state, params, rho, i), state.a(i), i);
  return lambda;
}

/// One EGsPaRse step: x_ji(t+1) = b_ij(lambda_i), with lambda_i the budget root.
template <typename Scalar>
AllocationMatrix<Scalar> egsparse_step(const MarketState<Scalar>& state,
                                       const SparsityParams& params) {
  const MultiplierVector<Scalar> lambda = egsparse_multipliers(state, params);
  const Eigen::Index n = state.size();
  Matrix<Scalar> next(n, n);
  for (Eigen::Index i = 0; i < n; ++i) next.col(i) = egsparse_bids(state, params, lambda(i), i);
  return AllocationMatrix<Scalar>(std::move(next));
}

/// Objective of the sparsity-penalized divergence program,
///   f(X) = D(r(X), a) + c sum_{i != j} log(eps + x_ij).
/// SPaRse steps never increase it.
template <typename Scalar>
Scalar sparse_objective(const AllocationMatrix<Scalar>& x, const EndowmentVector<Scalar>& a,
                        const SparsityParams& params) {
  detail::CompensatedSum<Scalar> penalty;
  const auto& m = x.values();
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j) penalty.add(std::log(Scalar(params.eps) + m(i, j)));
  return kl_divergence(receive_vector(m), a.values()) + Scalar(params.c) * penalty.value();
}

template <typename Scalar>
AllocationMatrix<Scalar> step(Algorithm alg, const MarketState<Scalar>& state,
                              const SparsityParams& params) {
  switch (alg) {
    case Algorithm::PR: return pr_step(state);
    case Algorithm::SPARSE: return sparse_step(state, params);
    case Algorithm::EGSPARSE: return egsparse_step(state, params);
  }
  throw DomainError("unknown algorithm");
}

template <typename Scalar>
struct RunResult {
  MarketState<Scalar> final_state;
  std::vector<MetricsRecord> records;
  bool converged = false;
};

/// Called after every step with the state before the step and the new allocation.
template <typename Scalar>
using StepObserver =
    std::function<void(const MarketState<Scalar>& before, const AllocationMatrix<Scalar>& after)>;

/// Iterates the configured rule until max_iters or until the largest entry
/// change falls to conv_tol * mean(a). Metrics are recorded at t = 0, every
/// record_every steps, and at the final step.
template <typename Scalar>
RunResult<Scalar> run(MarketState<Scalar> state, const RunConfig& cfg,
                      const StepObserver<Scalar>& observer = {}) {
  cfg.validate();
  const Scalar tol = Scalar(cfg.conv_tol) * state.a.mean();
  RunResult<Scalar> result;
  result.records.push_back(measure(state, cfg.params.tau));

  while (state.t < cfg.max_iters) {
    AllocationMatrix<Scalar> next;
    try {
      next = step(cfg.algorithm, state, cfg.params);
    } catch (const BracketError& e) {
      throw BracketError("iteration " + std::to_string(state.t) + ": " + e.what());
    } catch (const DegenerateStateError& e) {
      throw DegenerateStateError("iteration " + std::to_string(state.t) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("iteration " + std::to_string(state.t) + ": " + e.what());
    }
    if (observer) observer(state, next);

    const Scalar delta = (next.values() - state.x.values()).cwiseAbs().maxCoeff();
    state = MarketState<Scalar>(std::move(next), std::move(state.a), state.t + 1);
    result.converged = delta <= tol;
    const bool last = result.converged || state.t == cfg.max_iters;
    if (last || state.t % cfg.record_every == 0)
      result.records.push_back(measure(state, cfg.params.tau, static_cast<double>(delta)));
    if (result.converged) break;
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace sparse_exchange

#endif  // SPARSE_EXCHANGE_DYNAMICS_HPP
