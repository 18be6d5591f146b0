#pragma once

#include <Eigen/Dense>

namespace minifunc {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

struct LpOptions {
  double tolerance = 1e-11;
  int max_iterations = 200000;
  double perturbation = 1e-9;  // relative right-hand-side perturbation during pivoting
};

/// Dense two-phase tableau simplex with Bland's rule for
///   maximize c'x  subject to  A x = b,  x >= 0.
/// Meant for small programs (tens of rows, a few thousand columns).
LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                  LpOptions opts = {});

}  // namespace minifunc
