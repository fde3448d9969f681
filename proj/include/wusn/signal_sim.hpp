#pragma once

#include "wusn/geometry.hpp"
#include "wusn/random.hpp"
#include "wusn/rcrt.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

namespace wusn {

/// One received tone: unit-amplitude complex exponential delayed by `delay`, observed over
/// `duration` in complex white Gaussian noise at the given per-sample SNR.
struct SinusoidObservation {
  double frequency = 0.0; ///< rad/s
  double delay = 0.0;     ///< s
  double duration = 0.0;  ///< s
  double snr_db = 0.0;
};

/// Phase of the time-averaged cross-correlation conj(s_i) * s_j over `samples` uniform
/// samples of [0, duration), wrapped to [0, 2pi). Noise-free it equals
/// frequency * (delay_i - delay_j) mod 2pi. Throws std::invalid_argument on mismatched
/// frequencies or durations.
double cross_correlation_phase(const SinusoidObservation& obs_i, const SinusoidObservation& obs_j, Rng& rng,
                               std::size_t samples = 1000);

/// Phase error standard deviation of a tone at the given SNR: 1 / sqrt(2 * SNR_linear).
/// +inf dB maps to 0.
double phase_noise_sigma(double snr_db);

/// Wrapped noisy remainders of r_true; the quotients are not reported.
RemainderVector simulate_phase_remainders(double r_true, const WavelengthSet& ws, double snr_db, Rng& rng);

/// Range-difference observations r = s(x) + n with diagonal noise covariance W.
struct MeasurementSet {
  std::vector<std::pair<NodeId, NodeId>> pairs; ///< (node i, reference node j)
  Eigen::VectorXd values;
  Eigen::VectorXd variances; ///< diagonal of W

  std::size_t size() const { return pairs.size(); }
  /// Diagonal of W^-1. A noiseless set (all variances zero) is weighted uniformly.
  Eigen::VectorXd inverse_variances() const;
};

/// One measurement per sensor, referenced to its own head, in head-major order.
MeasurementSet simulate_tdoa_measurements(const NetworkTopology& topology, const Position& source, double sigma,
                                          Rng& rng);

/// CSV rows `trial,i,j,value,sigma`; the header is written when `header` is set.
void write_measurements_csv(std::ostream& out, std::size_t trial, const MeasurementSet& meas, bool header = true);

} // namespace wusn
