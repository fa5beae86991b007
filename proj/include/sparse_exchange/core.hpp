#ifndef SPARSE_EXCHANGE_CORE_HPP
#define SPARSE_EXCHANGE_CORE_HPP

#include "sparse_exchange/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparse_exchange {

namespace detail {

// Neumaier compensated sum; objectives are compared across iterations at
// 1e-10 absolute, which plain summation over N^2 terms does not guarantee.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar v) {
    const Scalar t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_{0};
  Scalar comp_{0};
};

}  // namespace detail

/// r_i = sum_{j != i} X(i, j): total amount peer i receives.
template <typename Derived>
Vector<typename Derived::Scalar> receive_vector(const Eigen::MatrixBase<Derived>& x) {
  Vector<typename Derived::Scalar> r = x.rowwise().sum();
  r -= x.diagonal();
  return r;
}

template <typename Scalar>
Vector<Scalar> receive_vector(const AllocationMatrix<Scalar>& x) {
  return receive_vector(x.values());
}

/// rho_i = r_i / a_i.
template <typename Derived, typename VDerived>
Vector<typename Derived::Scalar> exchange_ratios(const Eigen::MatrixBase<Derived>& x,
                                                 const Eigen::MatrixBase<VDerived>& a) {
  if (a.size() != x.rows()) throw DomainError("exchange_ratios: size mismatch");
  if ((a.array() <= 0).any()) throw DomainError("exchange_ratios: endowments must be positive");
  return receive_vector(x).cwiseQuotient(a);
}

template <typename Scalar>
Vector<Scalar> exchange_ratios(const AllocationMatrix<Scalar>& x, const EndowmentVector<Scalar>& a) {
  return exchange_ratios(x.values(), a.values());
}

/// Generalized Kullback-Leibler divergence
///   D(u, v) = sum u log(u / v) - sum (u - v)
/// over all entries of two equally shaped arrays (vectors or matrices), with
/// 0 log(0 / v) = 0. Throws DomainError when u > 0 meets v = 0.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar kl_divergence(const Eigen::DenseBase<DerivedU>& u,
                                        const Eigen::DenseBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw DomainError("kl_divergence: shape mismatch");
  detail::CompensatedSum<Scalar> acc;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const Scalar ui = u(i, j);
      const Scalar vi = v(i, j);
      if (ui < Scalar(0) || vi < Scalar(0)) throw DomainError("kl_divergence: negative entry");
      if (ui > Scalar(0)) {
        if (vi == Scalar(0)) throw DomainError("kl_divergence: u > 0 where v = 0");
        acc.add(ui * std::log(ui / vi));
      }
      acc.add(vi - ui);
    }
  }
  // Each term is nonnegative in exact arithmetic; clip rounding residue.
  return std::max(acc.value(), Scalar(0));
}

/// Allocation size above which an entry counts as a link: tau * mean(a) / (N - 1),
/// i.e. tau times the per-edge amount of an equal split.
template <typename VDerived>
typename VDerived::Scalar link_threshold(const Eigen::MatrixBase<VDerived>& a, double tau) {
  using Scalar = typename VDerived::Scalar;
  if (!(tau > 0.0)) throw DomainError("link threshold tau must be > 0");
  return Scalar(tau) * a.mean() / Scalar(a.size() - 1);
}

template <typename Derived, typename VDerived>
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> link_mask(const Eigen::MatrixBase<Derived>& x,
                                                              const Eigen::MatrixBase<VDerived>& a,
                                                              double tau) {
  const auto threshold = link_threshold(a, tau);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask = (x.array() > threshold).matrix();
  mask.diagonal().setConstant(false);
  return mask;
}

/// Number of directed links.
template <typename Derived, typename VDerived>
int cardinality(const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<VDerived>& a,
                double tau) {
  return static_cast<int>(link_mask(x, a, tau).count());
}

/// Number of directed links whose reverse is also a link.
template <typename Derived, typename VDerived>
int reciprocity(const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<VDerived>& a,
                double tau) {
  const auto mask = link_mask(x, a, tau);
  return static_cast<int>(mask.cwiseProduct(mask.transpose()).count());
}

template <typename Scalar>
int cardinality(const AllocationMatrix<Scalar>& x, const EndowmentVector<Scalar>& a, double tau) {
  return cardinality(x.values(), a.values(), tau);
}

template <typename Scalar>
int reciprocity(const AllocationMatrix<Scalar>& x, const EndowmentVector<Scalar>& a, double tau) {
  return reciprocity(x.values(), a.values(), tau);
}

template <typename Derived, typename VDerived>
typename Derived::Scalar min_exchange_ratio(const Eigen::MatrixBase<Derived>& x,
                                            const Eigen::MatrixBase<VDerived>& a) {
  return exchange_ratios(x, a).minCoeff();
}

template <typename Scalar>
Scalar min_exchange_ratio(const AllocationMatrix<Scalar>& x, const EndowmentVector<Scalar>& a) {
  return min_exchange_ratio(x.values(), a.values());
}

/// Snapshot of the reported metrics for one allocation.
template <typename Scalar>
MetricsRecord measure(const MarketState<Scalar>& state, double tau, double step_delta = 0.0) {
  const auto& x = state.x.values();
  const auto& a = state.a.values();
  const Vector<Scalar> r = receive_vector(x);
  MetricsRecord m;
  m.t = state.t;
  m.cardinality = cardinality(x, a, tau);
  m.reciprocity = reciprocity(x, a, tau);
  m.min_ratio = static_cast<double>(r.cwiseQuotient(a).minCoeff());
  m.d_ra = static_cast<double>(kl_divergence(r, a));
  m.d_ar = static_cast<double>(kl_divergence(a, r));
  m.step_delta = step_delta;
  return m;
}

}  // namespace sparse_exchange

#endif  // SPARSE_EXCHANGE_CORE_HPP
