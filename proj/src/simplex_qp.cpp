#include "wusn/simplex_qp.hpp"

#include "wusn/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace wusn {

double simplex_kkt_residual(const Eigen::MatrixXd& Q, const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = 2.0 * Q * x;
  const double mu = x.dot(g);
  const double scale = std::max(g.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  double res = std::abs(x.sum() - 1.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    res = std::max(res, std::max(-x(i), 0.0));
    res = std::max(res, std::max(mu - g(i), 0.0) / scale);
    res = std::max(res, std::abs(x(i) * (g(i) - mu)) / scale);
  }
  return res;
}

SimplexQpResult minimize_on_simplex(const Eigen::MatrixXd& Qin) {
  const Eigen::Index n = Qin.rows();
  if (n == 0 || Qin.cols() != n) throw ConfigError("minimize_on_simplex: Q must be square and non-empty");

  SimplexQpResult out;
  Eigen::MatrixXd Q = 0.5 * (Qin + Qin.transpose());
  if (n == 1) {
    out.x = Eigen::VectorXd::Ones(1);
    out.objective = Q(0, 0);
    return out;
  }

  const double trace = Q.trace();
  if (!(trace > 0.0)) {
    // zero (or invalid) objective: every feasible point is optimal
    out.x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    out.objective = out.x.dot(Q * out.x);
    out.regularized = true;
    return out;
  }
  // the minimizer is scale invariant; normalize so pivots are not lost next to large entries
  Q /= trace / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) <= 1e-12 * eig.eigenvalues()(n - 1)) {
    Q += 1e-9 * Eigen::MatrixXd::Identity(n, n);
    out.regularized = true;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  std::vector<bool> fixed(static_cast<std::size_t>(n), false);
  const int max_iters = 10 * static_cast<int>(n) + 10;

  for (int iter = 0; iter < max_iters; ++iter) {
    out.iterations = iter + 1;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(free.size());

    // [2 Q_FF  1] [y ]   [0]
    // [1^T     0] [mu] = [1]
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = 2.0 * Q(free[a], free[b]);
      kkt(a, m) = 1.0;
      kkt(m, a) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs(m) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    lu.setThreshold(0.0);
    Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite() || (kkt * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-8) {
      sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) y(free[a]) = sol(a);

    bool feasible = true;
    for (auto i : free) feasible = feasible && y(i) >= 0.0;

    if (feasible) {
      x = y;
      const Eigen::VectorXd g = 2.0 * Q * x;
      const double mu = x.dot(g);
      Eigen::Index release = -1;
      double most_negative = -1e-14 * std::max(g.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      for (Eigen::Index i = 0; i < n; ++i) {
        if (fixed[static_cast<std::size_t>(i)] && g(i) - mu < most_negative) {
          most_negative = g(i) - mu;
          release = i;
        }
      }
      if (release < 0) break;
      fixed[static_cast<std::size_t>(release)] = false;
      continue;
    }

    // move toward y until the first free coordinate reaches zero
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (auto i : free) {
      if (y(i) < 0.0) {
        const double t = x(i) / (x(i) - y(i));
        if (t < alpha) {
          alpha = t;
          blocking = i;
        }
      }
    }
    x += alpha * (y - x);
    if (blocking >= 0) {
      fixed[static_cast<std::size_t>(blocking)] = true;
      x(blocking) = 0.0;
    }
    x = x.cwiseMax(0.0);
    x /= x.sum();
  }

  out.x = x;
  out.objective = x.dot(Qin * x);
  out.kkt_residual = simplex_kkt_residual(Q, x);
  if (!x.allFinite()) throw EstimationError("minimize_on_simplex: solver produced a non-finite point");
  return out;
}

} // namespace wusn
