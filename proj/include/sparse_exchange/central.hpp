#ifndef SPARSE_EXCHANGE_CENTRAL_HPP
#define SPARSE_EXCHANGE_CENTRAL_HPP

// Centralized baselines for the sparsest allocation meeting a minimum
// exchange ratio theta:
//   P0  exact search over supports,
//   P1  successive linear programs on the log proxy sum log(eps + x),
//   P2  IRLS with a quadratic majorizer of the log proxy.

#include "sparse_exchange/lp.hpp"
#include "sparse_exchange/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sparse_exchange::central {

/// Minimum exchange ratio 0 < theta <= 1.
class ReciprocityTarget {
 public:
  explicit ReciprocityTarget(double theta);
  double value() const { return theta_; }

 private:
  double theta_;
};

/// Off-diagonal positions (receiver i, giver j) that may carry resources.
using Support = std::vector<std::pair<int, int>>;

/// All off-diagonal positions of an N x N allocation in row-major order.
Support full_support(int n);

/// LP over the entries of `support`: column sums equal a, row sums at least
/// theta * a, entries nonnegative. Variable k is support[k]. `cost` may be
/// empty for a pure feasibility problem.
lp::StandardFormLP allocation_lp(const EndowmentVector<double>& a, ReciprocityTarget theta,
                                 const Support& support, const VectorXd& cost = {});

/// Phase-1 feasibility of allocations restricted to `support`.
bool support_feasible(const EndowmentVector<double>& a, ReciprocityTarget theta,
                      const Support& support);

struct P0Result {
  int cardinality = 0;
  Support support;
  AllocationMatrix<double> witness;
  std::optional<std::string> warning;
};

/// Exact sparsest allocation by enumerating supports in increasing size,
/// lexicographic within a size. Requires N <= max_n; N = 5 is accepted
/// when max_n allows it but flagged with a warning (2^20 supports).
P0Result p0_brute_force(const EndowmentVector<double>& a, ReciprocityTarget theta, int max_n = 4);

struct P1Options {
  double eps = 0.01;
  int max_outer = 100;
  /// When set, the linear weights get seeded noise of size 1e-6 * mean(a).
  std::optional<std::uint64_t> perturbation_seed;
};

struct P2Params {
  double delta = 0.0;  // 0 selects 1e-4 * mean(a) / (N - 1)
  double eps = 0.01;
  int max_outer = 100;
  int inner_iters = 50;  // Newton steps per quadratic subproblem
  /// Seed of the random feasible-column starting point.
  std::uint64_t seed = 0;
};

struct CentralResult {
  AllocationMatrix<double> x;
  /// Log proxy sum log(eps + x_ij) after each outer iteration.
  std::vector<double> objective_trace;
  int outer_iterations = 0;
  bool converged = false;
};

/// Sum over off-diagonal entries of log(eps + x_ij).
double log_proxy(const MatrixXd& x, double eps);

/// Curvature of the quadratic majorizer anchored at `anchor`:
/// q(x) = weight * x^2 with weight = 1 / (2 m (eps + m)), m = max(anchor, delta).
double quadratic_weight(double anchor, double delta, double eps);

/// Reweighted linear programs: x(t+1) minimizes sum x_ij / (eps + x_ij(t))
/// over the feasible set. Starts from the equal split.
CentralResult p1_reweighted_lp(const EndowmentVector<double>& a, ReciprocityTarget theta,
                               const P1Options& options = {});

/// IRLS: each outer iteration re-anchors the quadratic majorizer and solves
/// the weighted QP through its 2N column/row multipliers (row multipliers
/// kept >= 0) by projected Newton steps, at most inner_iters of them; the
/// primal is the per-entry clamped quadratic minimizer. Returns the best
/// feasible iterate.
CentralResult p2_irls(const EndowmentVector<double>& a, ReciprocityTarget theta,
                      P2Params params = {});

/// Throws InfeasibleError if no allocation reaches theta.
void require_feasible(const EndowmentVector<double>& a, ReciprocityTarget theta);

}  // namespace sparse_exchange::central

#endif  // SPARSE_EXCHANGE_CENTRAL_HPP
