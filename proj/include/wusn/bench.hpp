#pragma once

#include "wusn/diffusion.hpp"
#include "wusn/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wusn {

// ---------------------------------------------------------------------------
// Ranging: robust CRT over an SNR grid

struct RangingExperiment {
  double B = 80.0;
  std::vector<std::int64_t> gammas{15, 16, 17};
  std::vector<double> snr_grid_db;
  std::size_t trials_per_point = 1000;
  std::uint64_t seed = 1;
};

struct RangingPoint {
  double snr_db = 0.0;
  double relative_error = 0.0;    ///< mean cyclic |r_hat - r| / d_max over unambiguous trials
  double ambiguity_rate = 0.0;    ///< fraction of trials with a non-singleton quotient intersection
  double relative_error_se = 0.0; ///< standard error of relative_error
  std::size_t trials = 0;
  std::size_t ambiguities = 0;
};

/// Throws ConfigError for an invalid wavelength set, an empty or non-increasing SNR grid
/// or zero trials.
std::vector<RangingPoint> run_ranging_experiment(const RangingExperiment& cfg);

// ---------------------------------------------------------------------------
// Localization: global WLS, the three diffusion schemes and the plain local average

enum class Method { global, con, wei, opt, local };

std::string to_string(Method method);
Method parse_method(const std::string& name);

enum class SweepVariable { n_heads, sensors_per_head, sigma, gamma };

std::string to_string(SweepVariable v);

/// At most one of the four list-valued parameters may hold more than one value; that one is
/// the sweep. With no list the run is a single point reported under sensors_per_head.
struct LocalizationExperiment {
  std::vector<std::size_t> n_heads{16};
  std::vector<std::size_t> sensors_per_head{10};
  std::vector<double> sigma{1.0};
  std::vector<double> gamma{1.0};
  Position source{60.0, 70.0};
  std::size_t runs = 200;
  std::vector<Method> methods{Method::global, Method::con, Method::wei, Method::opt, Method::local};
  std::uint64_t seed = 1;

  double spacing = 50.0;
  double placement_radius = 10.0;
  double neighbor_radius = 75.0;
  double epsilon = 1e-4;
  std::size_t max_epochs = 500;
  bool reoptimize_every_epoch = true;
  bool record_timing = false;

  SweepVariable sweep_variable() const;
  std::size_t sweep_size() const;
  void validate() const;
};

struct MetricsRecord {
  double sweep_value = 0.0;
  Method method = Method::global;
  double rmse = 0.0;
  double cpu_time = 0.0; ///< mean seconds per trial, 0 unless timing was requested
  double mean_epochs = 0.0;
  double crlb_rmse = 0.0;
  std::size_t fail_count = 0;
  std::size_t non_converged = 0;
};

/// Callbacks into the trial loop, used for per-epoch traces and invariant checks.
struct LocalizationHooks {
  std::function<void(double sweep_value, std::size_t trial, Scheme scheme, const EpochRecord&)> on_epoch;
};

/// Per sweep point and method: `runs` independent trials with fresh sensor placement and
/// noise. Trial t always draws from stream (seed, t), so every sweep point sees the same
/// realizations where the dimensions allow it. Records are ordered by sweep value then method.
std::vector<MetricsRecord> run_localization_experiment(const LocalizationExperiment& cfg,
                                                       const LocalizationHooks& hooks = {});

} // namespace wusn
