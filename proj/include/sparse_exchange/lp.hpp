#ifndef SPARSE_EXCHANGE_LP_HPP
#define SPARSE_EXCHANGE_LP_HPP

#include "sparse_exchange/types.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sparse_exchange::lp {

enum class RowSense { Equal, GreaterEqual, LessEqual };

/// minimize cost . x  subject to  A.row(k) x (=, >=, <=) b(k),  x >= 0.
struct StandardFormLP {
  MatrixXd A;
  VectorXd b;
  VectorXd cost;
  std::vector<RowSense> sense;

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }
  /// Throws DomainError on shape mismatch or non-finite data.
  void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded, NumericFailure };

std::string_view to_string(Status status);

struct Solution {
  Status status = Status::NumericFailure;
  VectorXd x;
  double objective = 0.0;
  std::int64_t pivots = 0;
};

/// Dense two-phase primal simplex with Bland's rule. Deterministic: the
/// same input always produces the same pivot sequence. Gives up with
/// NumericFailure after 10000 * max(m, n) pivots.
Solution lp_solve(const StandardFormLP& lp);

/// Phase 1 only: is the polytope {x >= 0 : A x (sense) b} nonempty?
/// The cost vector is ignored and may be empty. Throws Error on numeric failure.
bool lp_feasible(const StandardFormLP& lp);

/// Largest row violation of A x (sense) b, scaled by 1 + |b_k|.
double constraint_residual(const StandardFormLP& lp, const VectorXd& x);

}  // namespace sparse_exchange::lp

#endif  // SPARSE_EXCHANGE_LP_HPP
