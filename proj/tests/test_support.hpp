#ifndef SPARSE_EXCHANGE_TEST_SUPPORT_HPP
#define SPARSE_EXCHANGE_TEST_SUPPORT_HPP

// Random generators for property tests. Deliberately independent of the
// library's scenario sampling.

#include "sparse_exchange/types.hpp"

#include <cmath>
#include <random>

namespace sparse_exchange::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  VectorXd endowments(int n, double lo = 0.2, double hi = 5.0) {
    VectorXd a(n);
    for (int i = 0; i < n; ++i) a(i) = uniform(lo, hi);
    return a;
  }

  // Column-feasible, strictly positive off-diagonal. `spread` widens the
  // dynamic range of the entries so states are far from equal split.
  MatrixXd allocation(const VectorXd& a, double spread = 3.0) {
    const auto n = a.size();
    MatrixXd x = MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) x(i, j) = std::exp(spread * uniform(-1.0, 1.0));
      x.col(j) *= a(j) / x.col(j).sum();
    }
    return x;
  }

  MarketState<double> state(int n, double spread = 3.0) {
    VectorXd a = endowments(n);
    MatrixXd x = allocation(a, spread);
    return MarketState<double>(AllocationMatrix<double>(std::move(x)), EndowmentVector<double>(std::move(a)));
  }

 private:
  std::mt19937_64 engine_;
};

inline MarketState<double> make_state(const MatrixXd& x, const VectorXd& a) {
  return MarketState<double>(AllocationMatrix<double>(x), EndowmentVector<double>(a));
}

inline MatrixXd equal_split(const VectorXd& a) {
  const auto n = a.size();
  MatrixXd x(n, n);
  for (Eigen::Index j = 0; j < n; ++j) x.col(j).setConstant(a(j) / static_cast<double>(n - 1));
  x.diagonal().setZero();
  return x;
}

/// max |x - y| / max(1, |y|) entrywise.
inline double max_rel_diff(const MatrixXd& x, const MatrixXd& y) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k)
    worst = std::max(worst, std::abs(x(k) - y(k)) / std::max(1e-300, std::abs(y(k))));
  return worst;
}

}  // namespace sparse_exchange::testing

#endif  // SPARSE_EXCHANGE_TEST_SUPPORT_HPP
