#include "wusn/diffusion.hpp"

#include "wusn/errors.hpp"
#include "wusn/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wusn {

namespace {

bool is_active(const ActiveMask& active, std::size_t k) { return active.empty() || active.at(k); }

DiffusionCoefficients uniform_on(const std::vector<std::size_t>& nb, std::size_t k, std::size_t n_heads) {
  DiffusionCoefficients c;
  c.head = k;
  c.a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_heads));
  for (auto l : nb) c.a(static_cast<Eigen::Index>(l)) = 1.0 / static_cast<double>(nb.size());
  return c;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
  case Scheme::connectivity:
    return "con";
  case Scheme::median:
    return "wei";
  case Scheme::optimal:
    return "opt";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "con") return Scheme::connectivity;
  if (name == "wei") return Scheme::median;
  if (name == "opt") return Scheme::optimal;
  throw ConfigError("unknown diffusion scheme '" + name + "'");
}

std::vector<std::size_t> active_neighborhood(const NetworkTopology& topology, std::size_t k,
                                             const ActiveMask& active) {
  std::vector<std::size_t> nb;
  for (auto l : topology.neighborhood(k)) {
    if (is_active(active, l)) nb.push_back(l);
  }
  return nb;
}

DiffusionCoefficients connectivity_weights(const NetworkTopology& topology, std::size_t k,
                                           const ActiveMask& active) {
  const auto nb = active_neighborhood(topology, k, active);
  DiffusionCoefficients c;
  c.head = k;
  c.a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topology.head_count()));
  double total = 0.0;
  for (auto l : nb) {
    const auto deg = static_cast<double>(active_neighborhood(topology, l, active).size());
    c.a(static_cast<Eigen::Index>(l)) = deg;
    total += deg;
  }
  if (total > 0.0) c.a /= total;
  return c;
}

Position neighborhood_median(const std::vector<Position>& estimates, const std::vector<std::size_t>& neighborhood) {
  std::vector<double> d1;
  std::vector<double> d2;
  for (auto l : neighborhood) {
    d1.push_back(estimates.at(l).x());
    d2.push_back(estimates.at(l).y());
  }
  return {median_of(std::move(d1)), median_of(std::move(d2))};
}

DiffusionCoefficients median_weights(const std::vector<Position>& estimates, std::size_t k,
                                     const NetworkTopology& topology, double gamma, const ActiveMask& active) {
  if (!(gamma > 0.0)) throw ConfigError("median_weights: gamma must be positive");
  const auto nb = active_neighborhood(topology, k, active);
  if (nb.empty()) throw ConfigError("median_weights: empty neighborhood");

  const Position center = neighborhood_median(estimates, nb);

  DiffusionCoefficients c;
  c.head = k;
  c.a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topology.head_count()));
  double total = 0.0;
  for (auto l : nb) {
    const double w = std::exp(-(estimates[l] - center).squaredNorm() / gamma);
    c.a(static_cast<Eigen::Index>(l)) = w;
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    c = uniform_on(nb, k, topology.head_count());
    c.fallback = true;
    return c;
  }
  c.a /= total;
  return c;
}

Eigen::MatrixXd build_q_matrix(const std::vector<LinearOperator>& operators, const Eigen::VectorXd& variances,
                               const ActiveMask& active) {
  const auto N = static_cast<Eigen::Index>(operators.size());
  const Eigen::Index K = variances.size();
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(2 * N, K);
  for (Eigen::Index m = 0; m < N; ++m) {
    if (!is_active(active, static_cast<std::size_t>(m))) continue;
    const auto& L = operators[static_cast<std::size_t>(m)];
    if (L.cols() != K) throw ConfigError("build_q_matrix: operator width does not match W");
    stacked.middleRows(2 * m, 2) = L;
  }
  const Eigen::MatrixXd gram = stacked * variances.asDiagonal() * stacked.transpose();
  Eigen::MatrixXd Q(N, N);
  for (Eigen::Index m = 0; m < N; ++m) {
    for (Eigen::Index n = 0; n < N; ++n) {
      Q(m, n) = gram(2 * m, 2 * n) + gram(2 * m + 1, 2 * n + 1);
    }
  }
  return 0.5 * (Q + Q.transpose());
}

DiffusionCoefficients optimal_weights(const Eigen::MatrixXd& Q, std::size_t k, const NetworkTopology& topology,
                                      const ActiveMask& active) {
  const auto nb = active_neighborhood(topology, k, active);
  const auto m = static_cast<Eigen::Index>(nb.size());
  Eigen::MatrixXd restricted(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      restricted(a, b) = Q(static_cast<Eigen::Index>(nb[a]), static_cast<Eigen::Index>(nb[b]));
    }
  }
  const SimplexQpResult qp = minimize_on_simplex(restricted);

  DiffusionCoefficients c;
  c.head = k;
  c.a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topology.head_count()));
  for (Eigen::Index a = 0; a < m; ++a) c.a(static_cast<Eigen::Index>(nb[a])) = qp.x(a);
  c.regularized = qp.regularized;
  c.kkt_residual = qp.kkt_residual;
  return c;
}

DiffusionState make_diffusion_state(const std::vector<std::optional<LocalEstimate>>& locals) {
  DiffusionState state;
  state.estimates.resize(locals.size(), Position::Zero());
  state.operators.resize(locals.size());
  state.active.resize(locals.size(), false);
  for (std::size_t k = 0; k < locals.size(); ++k) {
    if (!locals[k]) continue;
    state.estimates[k] = locals[k]->position;
    state.operators[k] = locals[k]->op;
    state.active[k] = true;
  }
  return state;
}

DiffusionResult diffuse(DiffusionState initial, const DiffusionOptions& opts, const NetworkTopology& topology,
                        const Eigen::VectorXd& variances, const EpochObserver& observer) {
  if (!(opts.epsilon > 0.0)) throw ConfigError("diffuse: epsilon must be positive");
  const std::size_t N = topology.head_count();
  if (initial.estimates.size() != N) throw ConfigError("diffuse: one estimate per head is required");
  if (initial.active.empty()) initial.active.assign(N, true);
  const bool optimal = opts.scheme == Scheme::optimal;
  if (optimal && initial.operators.size() != N) {
    throw ConfigError("diffuse: the optimal scheme needs one operator per head");
  }

  DiffusionResult result;
  DiffusionState& state = result.state;
  state = std::move(initial);
  state.converged = false;
  const ActiveMask& active = state.active;

  std::vector<DiffusionCoefficients> coeffs(N);
  std::vector<DiffusionCoefficients> frozen;
  if (opts.scheme == Scheme::connectivity) {
    for (std::size_t k = 0; k < N; ++k) {
      if (active[k]) coeffs[k] = connectivity_weights(topology, k, active);
    }
  }

  while (state.epoch < opts.max_epochs) {
    if (opts.scheme == Scheme::median) {
      for (std::size_t k = 0; k < N; ++k) {
        if (!active[k]) continue;
        coeffs[k] = median_weights(state.estimates, k, topology, opts.gamma, active);
        coeffs[k].epoch = state.epoch;
        result.stats.fallbacks += coeffs[k].fallback ? 1 : 0;
      }
    } else if (optimal) {
      if (opts.reoptimize_every_epoch || frozen.empty()) {
        const Eigen::MatrixXd Q = build_q_matrix(state.operators, variances, active);
        for (std::size_t k = 0; k < N; ++k) {
          if (!active[k]) continue;
          coeffs[k] = optimal_weights(Q, k, topology, active);
          coeffs[k].epoch = state.epoch;
          result.stats.regularizations += coeffs[k].regularized ? 1 : 0;
          result.stats.max_kkt_residual = std::max(result.stats.max_kkt_residual, coeffs[k].kkt_residual);
        }
        if (!opts.reoptimize_every_epoch) frozen = coeffs;
      } else {
        coeffs = frozen;
      }
    }

    std::vector<Position> next(N, Position::Zero());
    std::vector<LinearOperator> next_ops;
    if (optimal) next_ops.resize(N);
    double max_step = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      if (!active[k]) {
        next[k] = state.estimates[k];
        if (optimal) next_ops[k] = state.operators[k];
        continue;
      }
      const auto& a = coeffs[k].a;
      if (optimal) next_ops[k] = LinearOperator::Zero(2, variances.size());
      for (auto l : topology.neighborhood(k)) {
        const double w = a(static_cast<Eigen::Index>(l));
        if (w == 0.0) continue;
        next[k] += w * state.estimates[l];
        if (optimal) {
          next_ops[k] += w * state.operators[l];
        }
      }
      max_step = std::max(max_step, (next[k] - state.estimates[k]).norm());
    }

    ++state.epoch;
    if (observer) {
      EpochRecord rec;
      rec.epoch = state.epoch;
      rec.coefficients = &coeffs;
      rec.previous = &state.estimates;
      rec.current = &next;
      rec.active = &active;
      rec.max_step = max_step;
      observer(rec);
    }
    state.estimates = std::move(next);
    if (optimal) state.operators = std::move(next_ops);
    if (max_step <= opts.epsilon) {
      state.converged = true;
      break;
    }
  }
  return result;
}

} // namespace wusn
