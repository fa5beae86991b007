#include "sparse_exchange/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparse_exchange::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-9;

enum class Phase { One, Two };

// Dense simplex tableau. Rows [0, m) are constraints, row m holds reduced
// costs; the last column is the right-hand side (objective row RHS stores
// minus the current objective value).
class Tableau {
 public:
  explicit Tableau(const StandardFormLP& lp) : n_(lp.cols()), m_(lp.rows()) {
    // Rows with negative right-hand side are negated, which flips their sense.
    std::vector<RowSense> sense(lp.sense);
    std::vector<double> sign(static_cast<std::size_t>(m_), 1.0);
    for (std::size_t k = 0; k < sense.size(); ++k) {
      if (lp.b(static_cast<Eigen::Index>(k)) >= 0.0) continue;
      sign[k] = -1.0;
      if (sense[k] == RowSense::GreaterEqual)
        sense[k] = RowSense::LessEqual;
      else if (sense[k] == RowSense::LessEqual)
        sense[k] = RowSense::GreaterEqual;
    }
    for (auto s : sense) {
      if (s != RowSense::Equal) ++n_slack_;
      if (s != RowSense::LessEqual) ++n_art_;
    }
    const Eigen::Index width = n_ + n_slack_ + n_art_;
    t_ = MatrixXd::Zero(m_ + 1, width + 1);
    basis_.assign(static_cast<std::size_t>(m_), -1);

    Eigen::Index slack = n_;
    Eigen::Index art = n_ + n_slack_;
    for (Eigen::Index k = 0; k < m_; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      t_.row(k).head(n_) = sign[ks] * lp.A.row(k);
      t_(k, width) = sign[ks] * lp.b(k);
      if (sense[ks] == RowSense::LessEqual) {
        t_(k, slack) = 1.0;
        basis_[ks] = slack++;
      } else {
        if (sense[ks] == RowSense::GreaterEqual) t_(k, slack++) = -1.0;
        t_(k, art) = 1.0;
        basis_[ks] = art++;
      }
    }
  }

  Eigen::Index width() const { return t_.cols() - 1; }
  bool is_artificial(Eigen::Index col) const { return col >= n_ + n_slack_; }

  void set_costs(const VectorXd& full_cost) {
    t_.row(m_).setZero();
    t_.row(m_).head(full_cost.size()) = full_cost.transpose();
    for (Eigen::Index k = 0; k < m_; ++k) {
      const double cb = t_(m_, basis_[static_cast<std::size_t>(k)]);
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(k);
    }
  }

  double objective() const { return -t_(m_, width()); }

  // Runs Bland's-rule pivots until optimal or unbounded. Returns
  // NumericFailure when the shared pivot budget is exhausted.
  Status optimize(Phase phase, std::int64_t& pivots, std::int64_t max_pivots) {
    const Eigen::Index rhs = width();
    while (true) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < rhs; ++j) {
        if (phase == Phase::Two && is_artificial(j)) continue;
        if (t_(m_, j) < -kCostTol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return Status::Optimal;

      Eigen::Index leaving = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < m_; ++k) {
        const double coef = t_(k, entering);
        if (coef <= kPivotTol) continue;
        const double ratio = std::max(t_(k, rhs), 0.0) / coef;
        const double tie = 1e-12 * (1.0 + std::abs(best));
        if (leaving < 0 || ratio < best - tie ||
            (ratio <= best + tie &&
             basis_[static_cast<std::size_t>(k)] < basis_[static_cast<std::size_t>(leaving)])) {
          if (leaving < 0 || ratio < best - tie) best = ratio;
          leaving = k;
        }
      }
      if (leaving < 0) return Status::Unbounded;
      if (++pivots > max_pivots) return Status::NumericFailure;
      pivot(leaving, entering);
    }
  }

  // After phase 1, pivot zero-level artificials out of the basis wherever a
  // structural column allows it. Rows where none does are redundant.
  void expel_artificials() {
    for (Eigen::Index k = 0; k < m_; ++k) {
      if (!is_artificial(basis_[static_cast<std::size_t>(k)])) continue;
      for (Eigen::Index j = 0; j < n_ + n_slack_; ++j) {
        if (std::abs(t_(k, j)) > kPivotTol) {
          pivot(k, j);
          break;
        }
      }
    }
  }

  VectorXd primal() const {
    VectorXd x = VectorXd::Zero(n_);
    for (Eigen::Index k = 0; k < m_; ++k) {
      const Eigen::Index col = basis_[static_cast<std::size_t>(k)];
      if (col < n_) x(col) = std::max(t_(k, width()), 0.0);
    }
    return x;
  }

 private:
  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index k = 0; k <= m_; ++k) {
      if (k == row) continue;
      const double f = t_(k, col);
      if (f != 0.0) t_.row(k) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  Eigen::Index n_slack_ = 0;
  Eigen::Index n_art_ = 0;
  MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

struct PhaseOneOutcome {
  Status status;
  std::int64_t pivots;
  std::int64_t max_pivots;
};

PhaseOneOutcome run_phase_one(Tableau& tab, const StandardFormLP& lp) {
  const std::int64_t max_pivots =
      10000 * static_cast<std::int64_t>(std::max(lp.rows(), lp.cols()));
  std::int64_t pivots = 0;
  VectorXd phase_cost = VectorXd::Zero(tab.width());
  for (Eigen::Index j = 0; j < tab.width(); ++j)
    if (tab.is_artificial(j)) phase_cost(j) = 1.0;
  tab.set_costs(phase_cost);
  Status status = tab.optimize(Phase::One, pivots, max_pivots);
  if (status == Status::Unbounded) status = Status::NumericFailure;  // phase 1 is bounded below by 0
  if (status == Status::Optimal) {
    const double scale = 1.0 + (lp.b.size() ? lp.b.cwiseAbs().maxCoeff() : 0.0);
    if (tab.objective() > kFeasTol * scale) status = Status::Infeasible;
  }
  return {status, pivots, max_pivots};
}

}  // namespace

void StandardFormLP::validate() const {
  if (A.rows() < 1 || A.cols() < 1) throw DomainError("LP needs at least one row and column");
  if (b.size() != A.rows()) throw DomainError("LP right-hand side size mismatch");
  if (sense.size() != static_cast<std::size_t>(A.rows())) throw DomainError("LP sense size mismatch");
  if (cost.size() != 0 && cost.size() != A.cols()) throw DomainError("LP cost size mismatch");
  if (!A.allFinite() || !b.allFinite() || !cost.allFinite())
    throw DomainError("LP data must be finite");
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericFailure: return "numeric_failure";
  }
  return "unknown";
}

Solution lp_solve(const StandardFormLP& lp) {
  lp.validate();
  if (lp.cost.size() != lp.cols()) throw DomainError("lp_solve needs a cost vector");
  Tableau tab(lp);
  auto [status, pivots, max_pivots] = run_phase_one(tab, lp);
  Solution sol;
  sol.status = status;
  sol.pivots = pivots;
  if (status != Status::Optimal) return sol;

  tab.expel_artificials();
  VectorXd full_cost = VectorXd::Zero(tab.width());
  full_cost.head(lp.cols()) = lp.cost;
  tab.set_costs(full_cost);
  sol.status = tab.optimize(Phase::Two, pivots, max_pivots);
  sol.pivots = pivots;
  if (sol.status != Status::Optimal) return sol;
  sol.x = tab.primal();
  sol.objective = lp.cost.dot(sol.x);
  return sol;
}

bool lp_feasible(const StandardFormLP& lp) {
  lp.validate();
  Tableau tab(lp);
  const auto outcome = run_phase_one(tab, lp);
  if (outcome.status == Status::NumericFailure)
    throw Error("lp_feasible: simplex pivot limit exceeded");
  return outcome.status == Status::Optimal;
}

double constraint_residual(const StandardFormLP& lp, const VectorXd& x) {
  const VectorXd ax = lp.A * x;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < lp.rows(); ++k) {
    const double diff = ax(k) - lp.b(k);
    double violation = 0.0;
    switch (lp.sense[static_cast<std::size_t>(k)]) {
      case RowSense::Equal: violation = std::abs(diff); break;
      case RowSense::GreaterEqual: violation = std::max(0.0, -diff); break;
      case RowSense::LessEqual: violation = std::max(0.0, diff); break;
    }
    worst = std::max(worst, violation / (1.0 + std::abs(lp.b(k))));
  }
  return worst;
}

}  // namespace sparse_exchange::lp
