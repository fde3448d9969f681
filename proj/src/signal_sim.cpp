#include "wusn/signal_sim.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace wusn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phi) {
  double y = std::fmod(phi, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  if (y >= kTwoPi) y -= kTwoPi;
  return y;
}

} // namespace

double phase_noise_sigma(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
  const double snr = std::pow(10.0, snr_db / 10.0);
  return 1.0 / std::sqrt(2.0 * snr);
}

double cross_correlation_phase(const SinusoidObservation& obs_i, const SinusoidObservation& obs_j, Rng& rng,
                               std::size_t samples) {
  if (obs_i.frequency != obs_j.frequency) {
    throw std::invalid_argument("cross_correlation_phase: observations must share one frequency");
  }
  if (obs_i.duration != obs_j.duration || !(obs_i.duration > 0.0)) {
    throw std::invalid_argument("cross_correlation_phase: durations must be equal and positive");
  }
  if (!(obs_i.frequency > 0.0) || samples == 0) {
    throw std::invalid_argument("cross_correlation_phase: frequency and sample count must be positive");
  }

  // per-sample complex noise variance 1/SNR, split evenly over I and Q
  auto noise_std = [](double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return std::sqrt(0.5 / std::pow(10.0, snr_db / 10.0));
  };
  const double std_i = noise_std(obs_i.snr_db);
  const double std_j = noise_std(obs_j.snr_db);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double w = obs_i.frequency;
  const double dt = obs_i.duration / static_cast<double>(samples);
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 0; n < samples; ++n) {
    const double t = static_cast<double>(n) * dt;
    std::complex<double> si = std::polar(1.0, w * (t - obs_i.delay));
    std::complex<double> sj = std::polar(1.0, w * (t - obs_j.delay));
    if (std_i > 0.0) si += std::complex<double>(std_i * gauss(rng), std_i * gauss(rng));
    if (std_j > 0.0) sj += std::complex<double>(std_j * gauss(rng), std_j * gauss(rng));
    acc += std::conj(si) * sj;
  }
  acc /= static_cast<double>(samples);
  return wrap_phase(std::arg(acc));
}

RemainderVector simulate_phase_remainders(double r_true, const WavelengthSet& ws, double snr_db, Rng& rng) {
  RemainderVector exact = remainders_of(r_true, ws);
  const double sigma_phi = phase_noise_sigma(snr_db);
  RemainderVector out;
  out.remainders.reserve(ws.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const double lambda = ws.lambdas[k];
    double rem = exact.remainders[k];
    if (sigma_phi > 0.0) {
      rem += lambda / kTwoPi * sigma_phi * gauss(rng);
      rem = std::fmod(rem, lambda);
      if (rem < 0.0) rem += lambda;
      if (rem >= lambda) rem -= lambda;
    }
    out.remainders.push_back(rem);
  }
  return out;
}

Eigen::VectorXd MeasurementSet::inverse_variances() const {
  if (variances.size() > 0 && (variances.array() == 0.0).all()) {
    return Eigen::VectorXd::Ones(variances.size());
  }
  return variances.cwiseInverse();
}

MeasurementSet simulate_tdoa_measurements(const NetworkTopology& topology, const Position& source, double sigma,
                                          Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("simulate_tdoa_measurements: sigma must be non-negative");
  MeasurementSet meas;
  const std::size_t count = topology.sensor_count();
  meas.pairs.reserve(count);
  meas.values.resize(static_cast<Eigen::Index>(count));
  meas.variances = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(count), sigma * sigma);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < topology.head_count(); ++k) {
    for (std::size_t m = 0; m < topology.sensors_per_head(); ++m) {
      const NodeId i = topology.sensor_id(k, m);
      meas.pairs.emplace_back(i, k);
      double value = true_range_difference(source, topology.position(i), topology.position(k));
      if (sigma > 0.0) value += sigma * gauss(rng);
      meas.values(row++) = value;
    }
  }
  return meas;
}

void write_measurements_csv(std::ostream& out, std::size_t trial, const MeasurementSet& meas, bool header) {
  const auto precision = out.precision(9);
  if (header) out << "trial,i,j,value,sigma\n";
  for (std::size_t l = 0; l < meas.size(); ++l) {
    const auto row = static_cast<Eigen::Index>(l);
    out << trial << ',' << meas.pairs[l].first << ',' << meas.pairs[l].second << ',' << meas.values(row) << ','
        << std::sqrt(meas.variances(row)) << '\n';
  }
  out.precision(precision);
}

} // namespace wusn
