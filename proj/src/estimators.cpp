#include "wusn/estimators.hpp"

#include "wusn/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace wusn {

namespace {

constexpr double kRankTol = 1e-12;

bool rank_deficient(const Eigen::Matrix2d& normal) {
  if (!normal.allFinite()) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(normal, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues()(1);
  const double lo = eig.eigenvalues()(0);
  return !(hi > 0.0) || lo <= kRankTol * hi;
}

double weighted_cost(const Eigen::VectorXd& residuals, const Eigen::VectorXd& weights) {
  return (weights.array() * residuals.array().square()).sum();
}

} // namespace

Eigen::VectorXd model_range_differences(const Position& x, const MeasurementSet& meas,
                                        const NetworkTopology& topology) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(meas.size()));
  for (std::size_t l = 0; l < meas.size(); ++l) {
    const auto [i, j] = meas.pairs[l];
    s(static_cast<Eigen::Index>(l)) = true_range_difference(x, topology.position(i), topology.position(j));
  }
  return s;
}

ResidualJacobian residual_and_jacobian(const Position& x, const MeasurementSet& meas,
                                       const NetworkTopology& topology) {
  const auto K = static_cast<Eigen::Index>(meas.size());
  ResidualJacobian out{Eigen::VectorXd(K), Jacobian(K, 2)};
  for (Eigen::Index l = 0; l < K; ++l) {
    const auto [i, j] = meas.pairs[static_cast<std::size_t>(l)];
    const Position di = x - topology.position(i);
    const Position dj = x - topology.position(j);
    const double ni = di.norm();
    const double nj = dj.norm();
    if (!(ni > 0.0) || !(nj > 0.0)) {
      throw EstimationError("residual_and_jacobian: evaluation point coincides with node " +
                            std::to_string(ni > 0.0 ? j : i));
    }
    out.residuals(l) = meas.values(l) - (ni - nj);
    out.P.row(l) = (di / ni - dj / nj).transpose();
  }
  return out;
}

WlsResult weighted_gauss_newton(const MeasurementSet& meas, const NetworkTopology& topology,
                                const Eigen::VectorXd& weights, const WlsOptions& opts) {
  if (opts.max_iters < 1 || !(opts.step_tol > 0.0) || !(opts.damping >= 0.0)) {
    throw ConfigError("weighted_gauss_newton: need max_iters >= 1, step_tol > 0, damping >= 0");
  }
  if (weights.size() != static_cast<Eigen::Index>(meas.size())) {
    throw ConfigError("weighted_gauss_newton: one weight per measurement is required");
  }

  WlsResult result;
  result.position = opts.init;
  auto current = residual_and_jacobian(result.position, meas, topology);
  double cost = weighted_cost(current.residuals, weights);
  result.initial_cost = cost;

  double mu = opts.damping;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    result.iterations = iter + 1;
    const Eigen::Matrix2d normal = current.P.transpose() * weights.asDiagonal() * current.P;
    const Eigen::Vector2d gradient = current.P.transpose() * (weights.array() * current.residuals.array()).matrix();
    const Eigen::Matrix2d damped = normal + mu * Eigen::Matrix2d::Identity();
    if (rank_deficient(damped)) {
      throw EstimationError("weighted_gauss_newton: singular normal equations");
    }
    const Eigen::Vector2d step = damped.ldlt().solve(gradient);
    const Position candidate = result.position + step;

    ResidualJacobian next;
    try {
      next = residual_and_jacobian(candidate, meas, topology);
    } catch (const EstimationError&) {
      mu = std::max(10.0 * mu, 1e-6);
      continue;
    }
    const double next_cost = weighted_cost(next.residuals, weights);
    if (next_cost <= cost) {
      result.position = candidate;
      current = std::move(next);
      cost = next_cost;
      mu /= 10.0;
      if (step.norm() < opts.step_tol) {
        result.converged = true;
        break;
      }
    } else {
      // a rejected step shorter than the tolerance means we are already at the minimum
      if (step.norm() < opts.step_tol) {
        result.converged = true;
        break;
      }
      mu = std::max(10.0 * mu, 1e-6);
    }
  }
  result.cost = cost;
  return result;
}

WlsResult global_wls(const MeasurementSet& meas, const NetworkTopology& topology, const WlsOptions& opts) {
  if (meas.size() < 3) throw EstimationError("global_wls: at least three measurements are required");
  return weighted_gauss_newton(meas, topology, meas.inverse_variances(), opts);
}

SelectionWeights build_selection_weights(const NetworkTopology& topology, const MeasurementSet& meas) {
  const std::size_t N = topology.head_count();
  const auto n = static_cast<Eigen::Index>(N);
  SelectionWeights sw;
  sw.head_weights = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < N; ++k) {
    double off = 0.0;
    for (auto l : topology.adjacency(k)) {
      const double c = 1.0 / static_cast<double>(std::max(topology.degree(l), topology.degree(k)));
      sw.head_weights(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = c;
      off += c;
    }
    sw.head_weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0 - off;
  }

  std::vector<std::size_t> per_head(N, 0);
  std::vector<std::size_t> head_of(meas.size());
  for (std::size_t i = 0; i < meas.size(); ++i) {
    head_of[i] = topology.owner(meas.pairs[i].second);
    ++per_head[head_of[i]];
  }
  sw.C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(meas.size()), n);
  for (std::size_t i = 0; i < meas.size(); ++i) {
    const auto l = static_cast<Eigen::Index>(head_of[i]);
    sw.C.row(static_cast<Eigen::Index>(i)) = sw.head_weights.row(l) / static_cast<double>(per_head[head_of[i]]);
  }
  return sw;
}

Eigen::Matrix2d LocalEstimate::covariance(const Eigen::VectorXd& variances) const {
  return op * variances.asDiagonal() * op.transpose();
}

LinearOperator weighted_pseudo_inverse(const Jacobian& P, const Eigen::VectorXd& weights) {
  const LinearOperator PtW = P.transpose() * weights.asDiagonal();
  const Eigen::Matrix2d normal = PtW * P;
  if (rank_deficient(normal)) {
    throw EstimationError("weighted_pseudo_inverse: rank-deficient normal matrix");
  }
  return normal.inverse() * PtW;
}

LocalEstimate local_wls(std::size_t k, const MeasurementSet& meas, const SelectionWeights& weights,
                        const NetworkTopology& topology, const WlsOptions& opts) {
  const Eigen::VectorXd selector = weights.selector(k);
  if ((selector.array() > 0.0).count() < 3) {
    throw EstimationError("local_wls: head " + std::to_string(k) + " selects fewer than three measurements");
  }
  const Eigen::VectorXd w = (selector.array() * meas.inverse_variances().array()).matrix();

  LocalEstimate est;
  est.head = k;
  est.fit = weighted_gauss_newton(meas, topology, w, opts);
  est.position = est.fit.position;
  const auto rj = residual_and_jacobian(est.position, meas, topology);
  est.op = weighted_pseudo_inverse(rj.P, w);
  return est;
}

Eigen::Matrix2d crlb(const MeasurementSet& meas, const NetworkTopology& topology, const Position& source,
                     const Eigen::VectorXd& variances) {
  if (variances.size() != static_cast<Eigen::Index>(meas.size())) {
    throw ConfigError("crlb: one variance per measurement is required");
  }
  const Jacobian P = residual_and_jacobian(source, meas, topology).P;
  if ((variances.array() == 0.0).all()) {
    Eigen::Matrix2d fisher = P.transpose() * P;
    if (rank_deficient(fisher)) throw GeometryError("crlb: Jacobian at the source is rank deficient");
    return Eigen::Matrix2d::Zero();
  }
  const Eigen::Matrix2d fisher = P.transpose() * variances.cwiseInverse().asDiagonal() * P;
  if (rank_deficient(fisher)) throw GeometryError("crlb: Jacobian at the source is rank deficient");
  return fisher.inverse();
}

Eigen::Matrix2d crlb(const MeasurementSet& meas, const NetworkTopology& topology, const Position& source) {
  return crlb(meas, topology, source, meas.variances);
}

} // namespace wusn
