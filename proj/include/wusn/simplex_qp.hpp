#pragma once

#include <Eigen/Core>

namespace wusn {

struct SimplexQpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Largest violation of primal feasibility, dual feasibility or complementarity,
  /// relative to the gradient magnitude.
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Q was not positive definite and was shifted by 1e-9 * tr(Q) / n before solving.
  bool regularized = false;
};

/// min x^T Q x  s.t.  sum(x) = 1, x >= 0, by a primal active-set method: solve the
/// equality-constrained KKT system on the free coordinates, step back to the boundary
/// when that point is infeasible, and release the fixed coordinate with the most negative
/// multiplier when it is feasible but not optimal.
SimplexQpResult minimize_on_simplex(const Eigen::MatrixXd& Q);

/// KKT residual of a candidate point, as reported in SimplexQpResult.
double simplex_kkt_residual(const Eigen::MatrixXd& Q, const Eigen::VectorXd& x);

} // namespace wusn
