#include "minifunc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace minifunc {
namespace {

// Revised simplex: the basis matrix is refactored from the original columns
// on every iteration. The programs here have few rows, so the LU is cheap
// and there is no drift from accumulated tableau updates.
class RevisedSimplex {
 public:
  RevisedSimplex(const Eigen::MatrixXd& A, Eigen::VectorXd b, std::vector<int> basis)
      : A_(A),
        b_(std::move(b)),
        basis_(std::move(basis)),
        m_(static_cast<int>(A.rows())),
        n_(static_cast<int>(A.cols())) {}

  std::vector<int>& basis() { return basis_; }
  const Eigen::VectorXd& xB() const { return xB_; }
  void set_rhs(Eigen::VectorXd b) { b_ = std::move(b); }

  void factor() {
    Eigen::MatrixXd B(m_, m_);
    for (int r = 0; r < m_; ++r) B.col(r) = A_.col(basis_[r]);
    lu_.compute(B);
    luT_.compute(B.transpose());
    xB_ = lu_.solve(b_);
    for (int r = 0; r < m_; ++r) {
      if (xB_(r) < 0.0 && xB_(r) > -1e-11) xB_(r) = 0.0;
    }
  }

  Eigen::VectorXd column(int j) const { return lu_.solve(A_.col(j)); }

  // Dantzig pricing; after a run of degenerate pivots switch to Bland's rule
  // (lowest-index improving column enters, lowest-index basic variable among
  // tied ratios leaves), which cannot cycle, until the objective moves again.
  LpStatus run(const Eigen::VectorXd& c, const std::vector<bool>& allowed, const LpOptions& opts,
               int& iters) {
    const double ctol = opts.tolerance * std::max(1.0, c.cwiseAbs().maxCoeff());
    constexpr double kPivotTol = 1e-9;
    constexpr int kBlandAfter = 50;
    std::vector<bool> is_basic(n_, false);
    int degenerate_run = 0;
    for (; iters < opts.max_iterations; ++iters) {
      factor();
      std::fill(is_basic.begin(), is_basic.end(), false);
      Eigen::VectorXd cB(m_);
      for (int r = 0; r < m_; ++r) {
        cB(r) = c(basis_[r]);
        is_basic[basis_[r]] = true;
      }
      const Eigen::VectorXd y = luT_.solve(cB);
      const bool bland = degenerate_run >= kBlandAfter;
      int enter = -1;
      double best_d = ctol;
      for (int j = 0; j < n_; ++j) {
        if (!allowed[j] || is_basic[j]) continue;
        const double d = c(j) - A_.col(j).dot(y);
        if (d > best_d) {
          enter = j;
          if (bland) break;
          best_d = d;
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      const Eigen::VectorXd alpha = column(enter);
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m_; ++r) {
        if (alpha(r) <= kPivotTol) continue;
        const double ratio = std::max(0.0, xB_(r)) / alpha(r);
        const double slack = 1e-12 * (1.0 + best);
        if (leave < 0 || ratio < best - slack ||
            (ratio <= best + slack && basis_[r] < basis_[leave])) {
          best = std::min(best, ratio);
          leave = r;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      degenerate_run = best > 1e-12 ? 0 : degenerate_run + 1;
      basis_[leave] = enter;
    }
    return LpStatus::IterationLimit;
  }

 private:
  const Eigen::MatrixXd& A_;
  Eigen::VectorXd b_;
  std::vector<int> basis_;
  int m_, n_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::FullPivLU<Eigen::MatrixXd> luT_;
  Eigen::VectorXd xB_;
};

}  // namespace

LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                  LpOptions opts) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  LpResult out;
  out.x = Eigen::VectorXd::Zero(n);

  // Phase I on [A | I] with rows signed so that b >= 0; artificials are n..n+m-1.
  Eigen::MatrixXd Aa = Eigen::MatrixXd::Zero(m, n + m);
  Eigen::VectorXd ba(m);
  std::vector<int> basis(m);
  for (int r = 0; r < m; ++r) {
    const double s = b(r) < 0.0 ? -1.0 : 1.0;
    Aa.block(r, 0, 1, n) = s * A.row(r);
    Aa(r, n + r) = 1.0;
    ba(r) = s * b(r);
    basis[r] = n + r;
  }
  // The moment programs are highly degenerate (many zero right-hand sides).
  // Pivoting on a slightly perturbed right-hand side avoids long runs of
  // zero-length steps; the final basis is then re-solved with the true b.
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  Eigen::VectorXd bp = ba;
  for (int r = 0; r < m; ++r) bp(r) += opts.perturbation * scale * (1.0 + r) / m;
  RevisedSimplex rs(Aa, bp, basis);
  Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
  c1.tail(m).setConstant(-1.0);
  std::vector<bool> allowed(n + m, true);
  int iters = 0;
  LpStatus st = rs.run(c1, allowed, opts, iters);
  out.iterations = iters;
  if (st == LpStatus::IterationLimit) {
    out.status = st;
    return out;
  }
  rs.factor();
  double infeas = 0.0;
  for (int r = 0; r < m; ++r) {
    if (rs.basis()[r] >= n) infeas += std::fabs(rs.xB()(r));
  }
  if (infeas > 1e-9 * scale + 2.0 * opts.perturbation * scale * m) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  // Swap zero-level artificials out of the basis where a structural column
  // can take their place.
  for (int r = 0; r < m; ++r) {
    if (rs.basis()[r] < n) continue;
    std::vector<bool> in_basis(n + m, false);
    for (int v : rs.basis()) in_basis[v] = true;
    for (int j = 0; j < n; ++j) {
      if (in_basis[j]) continue;
      if (std::fabs(rs.column(j)(r)) > 1e-7) {
        rs.basis()[r] = j;
        rs.factor();
        break;
      }
    }
  }
  for (int j = n; j < n + m; ++j) allowed[j] = false;

  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(n + m);
  c2.head(n) = c;
  st = rs.run(c2, allowed, opts, iters);
  if (st == LpStatus::Optimal) {
    rs.set_rhs(ba);
    rs.factor();
    if (rs.xB().minCoeff() < -1e-9 * scale) st = rs.run(c2, allowed, opts, iters);
  }
  out.status = st;
  out.iterations = iters;
  rs.factor();
  for (int r = 0; r < m; ++r) {
    if (rs.basis()[r] < n) out.x(rs.basis()[r]) = std::max(0.0, rs.xB()(r));
  }
  out.objective = c.dot(out.x);
  return out;
}

}  // namespace minifunc
