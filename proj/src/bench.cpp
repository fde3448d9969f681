#include "wusn/bench.hpp"

#include "wusn/errors.hpp"
#include "wusn/estimators.hpp"
#include "wusn/random.hpp"
#include "wusn/rcrt.hpp"
#include "wusn/signal_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

namespace wusn {

// ---------------------------------------------------------------------------
// ranging

std::vector<RangingPoint> run_ranging_experiment(const RangingExperiment& cfg) {
  const WavelengthSet ws = make_wavelength_set(cfg.B, cfg.gammas);
  if (cfg.trials_per_point < 1) throw ConfigError("ranging: trials_per_point must be >= 1");
  if (cfg.snr_grid_db.empty()) throw ConfigError("ranging: snr_grid_db must not be empty");
  for (std::size_t p = 1; p < cfg.snr_grid_db.size(); ++p) {
    if (!(cfg.snr_grid_db[p] > cfg.snr_grid_db[p - 1])) {
      throw ConfigError("ranging: snr_grid_db must be strictly increasing");
    }
  }

  std::vector<RangingPoint> points;
  for (std::size_t p = 0; p < cfg.snr_grid_db.size(); ++p) {
    RangingPoint pt;
    pt.snr_db = cfg.snr_grid_db[p];
    pt.trials = cfg.trials_per_point;
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t ok = 0;
    for (std::size_t t = 0; t < cfg.trials_per_point; ++t) {
      Rng rng = make_rng(cfg.seed, {p, t});
      std::uniform_real_distribution<double> dividend(0.0, ws.d_max);
      const double r = dividend(rng);
      const RemainderVector noisy = simulate_phase_remainders(r, ws, pt.snr_db, rng);
      try {
        const Reconstruction rec = robust_crt_reconstruct(noisy, ws);
        const double rel = cyclic_distance(rec.r_hat, r, ws.d_max) / ws.d_max;
        sum += rel;
        sum_sq += rel * rel;
        ++ok;
      } catch (const AmbiguityError&) {
        ++pt.ambiguities;
      }
    }
    pt.ambiguity_rate = static_cast<double>(pt.ambiguities) / static_cast<double>(pt.trials);
    if (ok > 0) {
      const double n = static_cast<double>(ok);
      pt.relative_error = sum / n;
      const double var = ok > 1 ? std::max(0.0, (sum_sq - n * pt.relative_error * pt.relative_error) / (n - 1.0)) : 0.0;
      pt.relative_error_se = std::sqrt(var / n);
    } else {
      pt.relative_error = std::numeric_limits<double>::quiet_NaN();
      pt.relative_error_se = std::numeric_limits<double>::quiet_NaN();
    }
    points.push_back(pt);
  }
  return points;
}

// ---------------------------------------------------------------------------
// localization

std::string to_string(Method method) {
  switch (method) {
  case Method::global:
    return "global";
  case Method::con:
    return "con";
  case Method::wei:
    return "wei";
  case Method::opt:
    return "opt";
  case Method::local:
    return "local";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::global, Method::con, Method::wei, Method::opt, Method::local}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown localization scheme '" + name + "'");
}

std::string to_string(SweepVariable v) {
  switch (v) {
  case SweepVariable::n_heads:
    return "n_heads";
  case SweepVariable::sensors_per_head:
    return "sensors_per_head";
  case SweepVariable::sigma:
    return "sigma";
  case SweepVariable::gamma:
    return "gamma";
  }
  return "?";
}

SweepVariable LocalizationExperiment::sweep_variable() const {
  if (n_heads.size() > 1) return SweepVariable::n_heads;
  if (sigma.size() > 1) return SweepVariable::sigma;
  if (gamma.size() > 1) return SweepVariable::gamma;
  return SweepVariable::sensors_per_head;
}

std::size_t LocalizationExperiment::sweep_size() const {
  return std::max({n_heads.size(), sensors_per_head.size(), sigma.size(), gamma.size()});
}

void LocalizationExperiment::validate() const {
  if (n_heads.empty() || sensors_per_head.empty() || sigma.empty() || gamma.empty()) {
    throw ConfigError("localization: n_heads, sensors_per_head, sigma and gamma need at least one value");
  }
  const int lists = (n_heads.size() > 1) + (sensors_per_head.size() > 1) + (sigma.size() > 1) + (gamma.size() > 1);
  if (lists > 1) throw ConfigError("localization: exactly one parameter may be swept");
  if (runs < 1) throw ConfigError("localization: runs must be >= 1");
  if (methods.empty()) throw ConfigError("localization: at least one scheme is required");
  for (auto s : sigma) {
    if (!(s >= 0.0)) throw ConfigError("localization: sigma must be non-negative");
  }
  for (auto g : gamma) {
    if (!(g > 0.0)) throw ConfigError("localization: gamma must be positive");
  }
  for (auto m : sensors_per_head) {
    if (m < 1) throw ConfigError("localization: sensors_per_head must be >= 1");
  }
  if (!(epsilon > 0.0)) throw ConfigError("localization: epsilon must be positive");
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& values, std::size_t index) {
  return values.size() == 1 ? values.front() : values.at(index);
}

struct Accumulator {
  double sum_sq_error = 0.0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double seconds = 0.0;
  double epochs = 0.0;
  std::size_t non_converged = 0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Scheme scheme_of(Method m) {
  switch (m) {
  case Method::con:
    return Scheme::connectivity;
  case Method::wei:
    return Scheme::median;
  default:
    return Scheme::optimal;
  }
}

} // namespace

std::vector<MetricsRecord> run_localization_experiment(const LocalizationExperiment& cfg,
                                                       const LocalizationHooks& hooks) {
  cfg.validate();
  std::vector<Method> methods = cfg.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  const bool need_local = std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::global; });
  const SweepVariable sweep = cfg.sweep_variable();

  std::vector<MetricsRecord> records;
  for (std::size_t p = 0; p < cfg.sweep_size(); ++p) {
    const std::size_t n_heads = pick(cfg.n_heads, p);
    const std::size_t per_head = pick(cfg.sensors_per_head, p);
    const double sigma = pick(cfg.sigma, p);
    const double gamma = pick(cfg.gamma, p);
    double sweep_value = 0.0;
    switch (sweep) {
    case SweepVariable::n_heads:
      sweep_value = static_cast<double>(n_heads);
      break;
    case SweepVariable::sensors_per_head:
      sweep_value = static_cast<double>(per_head);
      break;
    case SweepVariable::sigma:
      sweep_value = sigma;
      break;
    case SweepVariable::gamma:
      sweep_value = gamma;
      break;
    }

    std::vector<Accumulator> acc(methods.size());
    double crlb_trace_sum = 0.0;
    std::size_t crlb_count = 0;

    for (std::size_t t = 0; t < cfg.runs; ++t) {
      Rng rng = make_rng(cfg.seed, {t});
      GridNetworkConfig grid;
      grid.n_heads = n_heads;
      grid.spacing = cfg.spacing;
      grid.sensors_per_head = per_head;
      grid.placement_radius = cfg.placement_radius;
      grid.neighbor_radius = cfg.neighbor_radius;
      grid.seed = rng();
      const NetworkTopology topology = build_grid_network(grid);
      const MeasurementSet meas = simulate_tdoa_measurements(topology, cfg.source, sigma, rng);

      try {
        crlb_trace_sum += crlb(meas, topology, cfg.source).trace();
        ++crlb_count;
      } catch (const GeometryError&) {
      }

      WlsOptions wls;
      wls.init = topology.deployment_center();

      std::vector<std::optional<LocalEstimate>> locals;
      double local_seconds = 0.0;
      if (need_local) {
        const auto start = Clock::now();
        const SelectionWeights weights = build_selection_weights(topology, meas);
        locals.resize(n_heads);
        for (std::size_t k = 0; k < n_heads; ++k) {
          try {
            locals[k] = local_wls(k, meas, weights, topology, wls);
          } catch (const EstimationError&) {
          }
        }
        local_seconds = seconds_since(start);
      }
      const bool any_local = std::any_of(locals.begin(), locals.end(), [](const auto& l) { return l.has_value(); });

      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        Accumulator& a = acc[mi];
        const Method method = methods[mi];
        if (method == Method::global) {
          const auto start = Clock::now();
          try {
            const WlsResult g = global_wls(meas, topology, wls);
            a.seconds += seconds_since(start);
            a.sum_sq_error += (g.position - cfg.source).squaredNorm();
            ++a.successes;
          } catch (const EstimationError&) {
            ++a.failures;
          }
          continue;
        }
        if (!any_local) {
          ++a.failures;
          continue;
        }
        if (method == Method::local) {
          const auto start = Clock::now();
          Position mean = Position::Zero();
          std::size_t count = 0;
          for (const auto& l : locals) {
            if (!l) continue;
            mean += l->position;
            ++count;
          }
          mean /= static_cast<double>(count);
          a.seconds += local_seconds + seconds_since(start);
          a.sum_sq_error += (mean - cfg.source).squaredNorm();
          ++a.successes;
          continue;
        }

        DiffusionOptions dopts;
        dopts.scheme = scheme_of(method);
        dopts.epsilon = cfg.epsilon;
        dopts.max_epochs = cfg.max_epochs;
        dopts.gamma = gamma;
        dopts.reoptimize_every_epoch = cfg.reoptimize_every_epoch;
        EpochObserver observer;
        if (hooks.on_epoch) {
          observer = [&hooks, sweep_value, t, &dopts](const EpochRecord& rec) {
            hooks.on_epoch(sweep_value, t, dopts.scheme, rec);
          };
        }
        const auto start = Clock::now();
        const DiffusionResult res =
            diffuse(make_diffusion_state(locals), dopts, topology, meas.variances, observer);
        a.seconds += local_seconds + seconds_since(start);
        double err = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < n_heads; ++k) {
          if (!res.state.active[k]) continue;
          err += (res.state.estimates[k] - cfg.source).squaredNorm();
          ++count;
        }
        a.sum_sq_error += err / static_cast<double>(count);
        a.epochs += static_cast<double>(res.state.epoch);
        a.non_converged += res.state.converged ? 0 : 1;
        ++a.successes;
      }
    }

    const double crlb_rmse = crlb_count > 0 ? std::sqrt(crlb_trace_sum / static_cast<double>(crlb_count))
                                            : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Accumulator& a = acc[mi];
      MetricsRecord rec;
      rec.sweep_value = sweep_value;
      rec.method = methods[mi];
      const double n = static_cast<double>(a.successes);
      rec.rmse = a.successes > 0 ? std::sqrt(a.sum_sq_error / n) : std::numeric_limits<double>::quiet_NaN();
      rec.cpu_time = cfg.record_timing && a.successes > 0 ? a.seconds / n : 0.0;
      const bool diffusion = methods[mi] == Method::con || methods[mi] == Method::wei || methods[mi] == Method::opt;
      rec.mean_epochs = diffusion && a.successes > 0 ? a.epochs / n : 0.0;
      rec.crlb_rmse = crlb_rmse;
      rec.fail_count = a.failures;
      rec.non_converged = a.non_converged;
      records.push_back(rec);
    }
  }

  std::stable_sort(records.begin(), records.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    return a.sweep_value != b.sweep_value ? a.sweep_value < b.sweep_value : a.method < b.method;
  });
  return records;
}

} // namespace wusn
