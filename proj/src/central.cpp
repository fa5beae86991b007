#include "sparse_exchange/central.hpp"

#include "sparse_exchange/core.hpp"
#include "sparse_exchange/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sparse_exchange::central {

namespace {

MatrixXd to_matrix(int n, const Support& support, const VectorXd& values) {
  MatrixXd x = MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < support.size(); ++k)
    x(support[k].first, support[k].second) = values(static_cast<Eigen::Index>(k));
  return x;
}

// Rescale each column to its endowment; absorbs solver round-off.
void restore_columns(MatrixXd& x, const VectorXd& a) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    x(j, j) = 0.0;
    const double s = x.col(j).sum();
    if (s > 0.0) x.col(j) *= a(j) / s;
  }
}

bool meets_target(const MatrixXd& x, const VectorXd& a, double theta) {
  return exchange_ratios(x, a).minCoeff() >= theta - 1e-10;
}

// Dual of  min sum_ij x_ij^2 / (2 s_ij)  s.t. column sums = a, row sums >= theta a,
// x >= 0, in the 2N multipliers z = (nu, pi) with pi >= 0; the primal is
// x_ij = s_ij max(0, nu_j + pi_i). Projected Newton with an Armijo search
// along the projection arc. Returns whether the projected gradient fell
// below tol.
class WeightedQpDual {
 public:
  WeightedQpDual(const MatrixXd& scale, const VectorXd& a, double theta)
      : s_(scale), a_(a), theta_(theta), n_(a.size()) {}

  MatrixXd primal(const VectorXd& z) const {
    MatrixXd x = MatrixXd::Zero(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index i = 0; i < n_; ++i)
        if (i != j) x(i, j) = s_(i, j) * std::max(0.0, z(j) + z(n_ + i));
    return x;
  }

  double value(const VectorXd& z) const {
    double g = z.head(n_).dot(a_) + theta_ * z.tail(n_).dot(a_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (i == j) continue;
        const double u = std::max(0.0, z(j) + z(n_ + i));
        g -= 0.5 * s_(i, j) * u * u;
      }
    return g;
  }

  VectorXd gradient(const VectorXd& z) const {
    const MatrixXd x = primal(z);
    VectorXd g(2 * n_);
    g.head(n_) = a_ - x.colwise().sum().transpose();
    g.tail(n_) = theta_ * a_ - x.rowwise().sum();
    return g;
  }

  double projected_gradient(const VectorXd& z, const VectorXd& g) const {
    double worst = g.head(n_).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n_; ++i)
      worst = std::max(worst, z(n_ + i) > 0.0 ? std::abs(g(n_ + i)) : std::max(0.0, g(n_ + i)));
    return worst;
  }

  bool solve(VectorXd& z, int max_iter, double tol) const {
    const Eigen::Index m = 2 * n_;
    for (int it = 0; it < max_iter; ++it) {
      const VectorXd g = gradient(z);
      if (projected_gradient(z, g) <= tol) return true;

      MatrixXd K = MatrixXd::Zero(m, m);
      for (Eigen::Index j = 0; j < n_; ++j)
        for (Eigen::Index i = 0; i < n_; ++i) {
          if (i == j || z(j) + z(n_ + i) <= 0.0) continue;
          const double v = s_(i, j);
          K(j, j) += v;
          K(n_ + i, n_ + i) += v;
          K(j, n_ + i) += v;
          K(n_ + i, j) += v;
        }
      std::vector<Eigen::Index> free;
      for (Eigen::Index k = 0; k < m; ++k) {
        const bool binding = k >= n_ && z(k) <= 0.0 && g(k) <= 0.0;
        if (!binding) free.push_back(k);
      }
      const auto f = static_cast<Eigen::Index>(free.size());
      const double dmax = std::max(1e-300, K.diagonal().maxCoeff());
      MatrixXd Kf(f, f);
      VectorXd gf(f);
      for (Eigen::Index p = 0; p < f; ++p) {
        gf(p) = g(free[p]);
        for (Eigen::Index q = 0; q < f; ++q) Kf(p, q) = K(free[p], free[q]);
        // Directions without curvature get a gradient step; the rest a
        // tiny ridge against the nu/pi shift degeneracy.
        Kf(p, p) += Kf(p, p) > 0.0 ? 1e-12 * dmax : dmax;
      }
      const VectorXd df = Kf.ldlt().solve(gf);
      VectorXd d = VectorXd::Zero(m);
      for (Eigen::Index p = 0; p < f; ++p) d(free[p]) = df(p);

      const double g0 = value(z);
      bool moved = false;
      for (double step = 1.0; step > 1e-18; step *= 0.5) {
        VectorXd trial = z + step * d;
        trial.tail(n_) = trial.tail(n_).cwiseMax(0.0);
        if (value(trial) >= g0 + 1e-4 * g.dot(trial - z)) {
          moved = (trial - z).cwiseAbs().maxCoeff() > 0.0;
          z = std::move(trial);
          break;
        }
      }
      if (!moved) return projected_gradient(z, gradient(z)) <= tol;
    }
    return projected_gradient(z, gradient(z)) <= tol;
  }

 private:
  const MatrixXd& s_;
  const VectorXd& a_;
  double theta_;
  Eigen::Index n_;
};

}  // namespace

ReciprocityTarget::ReciprocityTarget(double theta) : theta_(theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw DomainError("reciprocity target theta must lie in (0, 1]");
}

Support full_support(int n) {
  Support s;
  s.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) s.emplace_back(i, j);
  return s;
}

lp::StandardFormLP allocation_lp(const EndowmentVector<double>& a, ReciprocityTarget theta,
                                 const Support& support, const VectorXd& cost) {
  const Eigen::Index n = a.size();
  lp::StandardFormLP lp;
  lp.A = MatrixXd::Zero(2 * n, static_cast<Eigen::Index>(support.size()));
  lp.b = VectorXd(2 * n);
  lp.sense.assign(static_cast<std::size_t>(2 * n), lp::RowSense::Equal);
  for (Eigen::Index k = 0; k < n; ++k) {
    lp.b(k) = a(k);
    lp.b(n + k) = theta.value() * a(k);
    lp.sense[static_cast<std::size_t>(n + k)] = lp::RowSense::GreaterEqual;
  }
  for (std::size_t v = 0; v < support.size(); ++v) {
    const auto [i, j] = support[v];
    if (i == j || i < 0 || j < 0 || i >= n || j >= n)
      throw DomainError("support position out of range or on the diagonal");
    lp.A(j, static_cast<Eigen::Index>(v)) = 1.0;      // giver column sum
    lp.A(n + i, static_cast<Eigen::Index>(v)) = 1.0;  // receiver row sum
  }
  lp.cost = cost.size() ? cost : VectorXd::Zero(static_cast<Eigen::Index>(support.size()));
  return lp;
}

bool support_feasible(const EndowmentVector<double>& a, ReciprocityTarget theta,
                      const Support& support) {
  if (support.empty()) return false;
  return lp::lp_feasible(allocation_lp(a, theta, support));
}

void require_feasible(const EndowmentVector<double>& a, ReciprocityTarget theta) {
  if (!support_feasible(a, theta, full_support(static_cast<int>(a.size()))))
    throw InfeasibleError("no allocation reaches minimum exchange ratio " +
                          std::to_string(theta.value()));
}

P0Result p0_brute_force(const EndowmentVector<double>& a, ReciprocityTarget theta, int max_n) {
  const int n = static_cast<int>(a.size());
  if (n > max_n)
    throw DomainError("p0_brute_force: N = " + std::to_string(n) + " exceeds max_n = " +
                      std::to_string(max_n));
  require_feasible(a, theta);

  P0Result result;
  if (n >= 5)
    result.warning = "exhaustive support search over 2^" + std::to_string(n * (n - 1)) +
                     " supports; expect a long run";

  const Support positions = full_support(n);
  const int total = static_cast<int>(positions.size());
  for (int k = 1; k <= total; ++k) {
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      // Every giver must keep at least one outgoing position.
      std::vector<bool> gives(static_cast<std::size_t>(n), false);
      for (int p : pick) gives[static_cast<std::size_t>(positions[static_cast<std::size_t>(p)].second)] = true;
      if (std::all_of(gives.begin(), gives.end(), [](bool g) { return g; })) {
        Support support;
        for (int p : pick) support.push_back(positions[static_cast<std::size_t>(p)]);
        const auto lp = allocation_lp(a, theta, support);
        const auto sol = lp::lp_solve(lp);
        if (sol.status == lp::Status::Optimal) {
          MatrixXd x = to_matrix(n, support, sol.x);
          restore_columns(x, a.values());
          result.cardinality = k;
          result.support = std::move(support);
          result.witness = AllocationMatrix<double>(std::move(x));
          return result;
        }
        if (sol.status == lp::Status::NumericFailure)
          throw Error("p0_brute_force: LP numeric failure");
      }
      // Next k-combination of [0, total) in lexicographic order.
      int pos = k - 1;
      while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == total - k + pos) --pos;
      if (pos < 0) break;
      ++pick[static_cast<std::size_t>(pos)];
      for (int q = pos + 1; q < k; ++q)
        pick[static_cast<std::size_t>(q)] = pick[static_cast<std::size_t>(q - 1)] + 1;
    }
  }
  throw InfeasibleError("p0_brute_force: no feasible support");
}

double log_proxy(const MatrixXd& x, double eps) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (i != j) total += std::log(eps + x(i, j));
  return total;
}

double quadratic_weight(double anchor, double delta, double eps) {
  const double m = std::max(anchor, delta);
  return 1.0 / (2.0 * m * (eps + m));
}

CentralResult p1_reweighted_lp(const EndowmentVector<double>& a, ReciprocityTarget theta,
                               const P1Options& options) {
  if (!(options.eps > 0.0)) throw DomainError("p1: eps must be > 0");
  if (options.max_outer < 1) throw DomainError("p1: max_outer must be >= 1");
  require_feasible(a, theta);

  const int n = static_cast<int>(a.size());
  const Support support = full_support(n);
  const double abar = a.mean();
  std::optional<Rng> rng;
  if (options.perturbation_seed) rng.emplace(*options.perturbation_seed);

  MatrixXd x = MatrixXd::Constant(n, n, 0.0);
  for (int j = 0; j < n; ++j) x.col(j).setConstant(a(j) / (n - 1));
  x.diagonal().setZero();

  CentralResult result;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    VectorXd cost(static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
      cost(static_cast<Eigen::Index>(k)) = 1.0 / (options.eps + x(support[k].first, support[k].second));
      if (rng) cost(static_cast<Eigen::Index>(k)) += 1e-6 * abar * rng->uniform();
    }
    const auto sol = lp::lp_solve(allocation_lp(a, theta, support, cost));
    if (sol.status == lp::Status::Infeasible)
      throw InfeasibleError("p1: linear program infeasible");
    if (sol.status != lp::Status::Optimal)
      throw Error("p1: linear program failed (" + std::string(lp::to_string(sol.status)) + ")");

    MatrixXd next = to_matrix(n, support, sol.x);
    restore_columns(next, a.values());
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    result.objective_trace.push_back(log_proxy(x, options.eps));
    result.outer_iterations = outer + 1;
    if (change <= 1e-9 * abar) {
      result.converged = true;
      break;
    }
  }
  result.x = AllocationMatrix<double>(std::move(x));
  return result;
}

CentralResult p2_irls(const EndowmentVector<double>& a, ReciprocityTarget theta, P2Params params) {
  const int n = static_cast<int>(a.size());
  const double abar = a.mean();
  if (params.delta == 0.0) params.delta = 1e-4 * abar / (n - 1);
  if (!(params.delta > 0.0)) throw DomainError("p2: delta must be > 0");
  if (!(params.eps > 0.0)) throw DomainError("p2: eps must be > 0");
  if (params.max_outer < 1 || params.inner_iters < 1)
    throw DomainError("p2: iteration counts must be >= 1");
  require_feasible(a, theta);

  const double th = theta.value();
  const auto& av = a.values();

  // Random column-normalized start; a symmetric start is a fixed point of
  // the reweighting for symmetric endowments.
  Rng rng(params.seed);
  MatrixXd x = MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i)
      if (i != j) x(i, j) = 0.5 + rng.uniform();
  }
  restore_columns(x, av);

  MatrixXd scale(n, n);  // 1 / (2 * weight)

  CentralResult result;
  std::optional<MatrixXd> best;
  double best_objective = 0.0;
  for (int outer = 0; outer < params.max_outer; ++outer) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        scale(i, j) = i == j ? 0.0 : 0.5 / quadratic_weight(x(i, j), params.delta, params.eps);

    // Start from multipliers that meet the column sums with every entry active.
    VectorXd z = VectorXd::Zero(2 * n);
    for (int j = 0; j < n; ++j) z(j) = av(j) / scale.col(j).sum();
    const WeightedQpDual dual(scale, av, th);
    dual.solve(z, params.inner_iters, 1e-12 * abar);
    MatrixXd next = dual.primal(z);
    restore_columns(next, av);

    const double change = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    const double objective = log_proxy(x, params.eps);
    result.objective_trace.push_back(objective);
    result.outer_iterations = outer + 1;
    if (meets_target(x, av, th) && (!best || objective <= best_objective)) {
      best = x;
      best_objective = objective;
    }
    if (change <= 1e-9 * abar) {
      result.converged = true;
      break;
    }
  }
  if (!best) throw Error("p2: no iterate met the reciprocation target");
  result.x = AllocationMatrix<double>(std::move(*best));
  return result;
}

}  // namespace sparse_exchange::central
