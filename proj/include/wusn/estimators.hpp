#pragma once

#include "wusn/geometry.hpp"
#include "wusn/signal_sim.hpp"

#include <Eigen/Core>

#include <cstddef>

namespace wusn {

/// Damped Gauss-Newton settings. `damping` is the initial additive term mu on the normal
/// equations; it is divided by 10 after an accepted step and multiplied by 10 after a rejected one.
struct WlsOptions {
  Position init = Position::Zero();
  int max_iters = 50;
  double step_tol = 1e-8;
  double damping = 1e-3;
};

struct WlsResult {
  Position position = Position::Zero();
  double initial_cost = 0.0;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using LinearOperator = Eigen::Matrix<double, 2, Eigen::Dynamic>;

struct ResidualJacobian {
  Eigen::VectorXd residuals; ///< r - s(x)
  Jacobian P;                ///< ds/dx, one row per measurement
};

/// s(x): model range differences ||x - x_i|| - ||x - x_j|| for every measurement pair.
Eigen::VectorXd model_range_differences(const Position& x, const MeasurementSet& meas,
                                        const NetworkTopology& topology);

/// Throws EstimationError when x coincides with a node used by a measurement.
ResidualJacobian residual_and_jacobian(const Position& x, const MeasurementSet& meas,
                                       const NetworkTopology& topology);

/// Minimizes sum_i weights_i * (r_i - s_i(x))^2. Rows with zero weight are ignored.
/// The returned cost never exceeds the cost at opts.init.
WlsResult weighted_gauss_newton(const MeasurementSet& meas, const NetworkTopology& topology,
                                const Eigen::VectorXd& weights, const WlsOptions& opts);

/// argmin (r - s(x))^T W^-1 (r - s(x)) over all measurements.
WlsResult global_wls(const MeasurementSet& meas, const NetworkTopology& topology, const WlsOptions& opts);

/// Measurement-to-head selection weights.
///
/// head_weights(l, k) is the Metropolis weight 1/max(deg_l, deg_k) between neighboring heads
/// (self-inclusive degrees) with the diagonal completing each column to one. A measurement
/// referenced to head l gets head_weights(l, k) divided by the number of measurements of
/// head l, so every column of C sums to one.
struct SelectionWeights {
  Eigen::MatrixXd C;            ///< K x N
  Eigen::MatrixXd head_weights; ///< N x N

  /// Diagonal of C_k = diag(C e_k).
  Eigen::VectorXd selector(std::size_t k) const { return C.col(static_cast<Eigen::Index>(k)); }
};

SelectionWeights build_selection_weights(const NetworkTopology& topology, const MeasurementSet& meas);

struct LocalEstimate {
  std::size_t head = 0;
  Position position = Position::Zero();
  LinearOperator op; ///< L_k = (P^T W^-1 C_k P)^-1 P^T W^-1 C_k, P taken at `position`
  std::size_t epoch = 0;
  WlsResult fit;

  /// cov = L_k W L_k^T.
  Eigen::Matrix2d covariance(const Eigen::VectorXd& variances) const;
};

/// Linear operator (P^T diag(w) P)^-1 P^T diag(w) for row weights w. Throws EstimationError
/// when the 2 x 2 normal matrix is rank deficient.
LinearOperator weighted_pseudo_inverse(const Jacobian& P, const Eigen::VectorXd& weights);

/// Local WLS at head k using only the measurements it selects. Throws EstimationError when
/// fewer than three measurements are selected or the local normal matrix is rank deficient.
LocalEstimate local_wls(std::size_t k, const MeasurementSet& meas, const SelectionWeights& weights,
                        const NetworkTopology& topology, const WlsOptions& opts);

/// (P^T W^-1 P)^-1 with P at the true source and W = diag(variances).
/// Throws GeometryError when P lacks full column rank.
Eigen::Matrix2d crlb(const MeasurementSet& meas, const NetworkTopology& topology, const Position& source,
                     const Eigen::VectorXd& variances);

/// Same, with W taken from the measurement set.
Eigen::Matrix2d crlb(const MeasurementSet& meas, const NetworkTopology& topology, const Position& source);

} // namespace wusn
