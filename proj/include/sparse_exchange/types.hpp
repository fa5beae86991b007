#ifndef SPARSE_EXCHANGE_TYPES_HPP
#define SPARSE_EXCHANGE_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sparse_exchange {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Error hierarchy. Everything derives from std::runtime_error so callers
// that only care about "the run failed" can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Input outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};
/// A state the dynamics cannot advance from (e.g. a peer receiving nothing).
struct DegenerateStateError : Error {
  using Error::Error;
};
/// The reciprocation target cannot be met by any allocation.
struct InfeasibleError : Error {
  using Error::Error;
};
/// Root bracketing for a budget multiplier did not terminate.
struct BracketError : Error {
  using Error::Error;
};

/// Per-peer resource endowments a_i > 0, N >= 2.
template <typename Scalar>
class EndowmentVector {
 public:
  EndowmentVector() = default;

  explicit EndowmentVector(Vector<Scalar> a) : a_(std::move(a)) {
    if (a_.size() < 2) throw DomainError("endowment vector needs at least 2 peers");
    for (Eigen::Index i = 0; i < a_.size(); ++i) {
      if (!(a_(i) > Scalar(0)) || !std::isfinite(static_cast<double>(a_(i))))
        throw DomainError("endowment " + std::to_string(i) + " is not a positive finite number");
    }
  }

  const Vector<Scalar>& values() const { return a_; }
  Scalar operator()(Eigen::Index i) const { return a_(i); }
  Eigen::Index size() const { return a_.size(); }
  Scalar mean() const { return a_.mean(); }
  Scalar sum() const { return a_.sum(); }

 private:
  Vector<Scalar> a_;
};

/// N x N nonnegative allocation with zero diagonal. Entry (i, j) is the
/// amount peer j gives to peer i, so column j is peer j's outflow.
template <typename Scalar>
class AllocationMatrix {
 public:
  AllocationMatrix() = default;

  explicit AllocationMatrix(Matrix<Scalar> x) : x_(std::move(x)) {
    if (x_.rows() != x_.cols()) throw DomainError("allocation matrix must be square");
    if (x_.rows() < 2) throw DomainError("allocation matrix needs at least 2 peers");
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      for (Eigen::Index i = 0; i < x_.rows(); ++i) {
        const Scalar v = x_(i, j);
        if (!std::isfinite(static_cast<double>(v)) || v < Scalar(0))
          throw DomainError("allocation entry (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is negative or not finite");
        if (i == j && v != Scalar(0))
          throw DomainError("allocation diagonal must be zero at " + std::to_string(i));
      }
    }
  }

  const Matrix<Scalar>& values() const { return x_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return x_(i, j); }
  Eigen::Index size() const { return x_.rows(); }

 private:
  Matrix<Scalar> x_;
};

/// Largest relative column-sum violation max_j |sum_i X(i,j) - a_j| / a_j.
template <typename Derived, typename VDerived>
typename Derived::Scalar column_residual(const Eigen::MatrixBase<Derived>& x,
                                         const Eigen::MatrixBase<VDerived>& a) {
  using Scalar = typename Derived::Scalar;
  Scalar worst(0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Scalar off_diag = x.col(j).sum() - x(j, j);
    worst = std::max(worst, Scalar(std::abs(off_diag - a(j)) / a(j)));
  }
  return worst;
}

template <typename Scalar>
bool is_column_feasible(const AllocationMatrix<Scalar>& x, const EndowmentVector<Scalar>& a,
                        Scalar rel_tol = Scalar(1e-9)) {
  return x.size() == a.size() && column_residual(x.values(), a.values()) <= rel_tol;
}

/// Allocation, endowments, and the iteration index they belong to.
template <typename Scalar>
struct MarketState {
  AllocationMatrix<Scalar> x;
  EndowmentVector<Scalar> a;
  std::int64_t t = 0;

  MarketState() = default;
  MarketState(AllocationMatrix<Scalar> x_, EndowmentVector<Scalar> a_, std::int64_t t_ = 0)
      : x(std::move(x_)), a(std::move(a_)), t(t_) {
    if (x.size() != a.size()) throw DomainError("allocation and endowment sizes differ");
  }

  Eigen::Index size() const { return a.size(); }
};

/// Penalty weight c, smoothing eps and link-count threshold tau.
struct SparsityParams {
  double c = 0.1;
  double eps = 0.01;
  double tau = 0.01;

  void validate() const {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("penalty weight c must be >= 0");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("smoothing eps must be > 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("link threshold tau must be > 0");
  }
};

struct MetricsRecord {
  std::int64_t t = 0;
  int cardinality = 0;
  int reciprocity = 0;
  double min_ratio = 0.0;
  double d_ra = 0.0;
  double d_ar = 0.0;
  double step_delta = 0.0;
};

}  // namespace sparse_exchange

#endif  // SPARSE_EXCHANGE_TYPES_HPP
