#pragma once

// Diffusion of local estimates over the cluster-head graph:
//   x_{k,i+1} = sum_l a_{l,k} x_{l,i},   a_k on the simplex with support in N_k.
// Three coefficient rules are provided: degree-proportional (con), median-centred
// exponential weights (wei) and the trace-of-covariance minimizer (opt).

#include "wusn/estimators.hpp"
#include "wusn/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wusn {

enum class Scheme { connectivity, median, optimal };

std::string to_string(Scheme scheme);
/// Accepts "con", "wei" and "opt".
Scheme parse_scheme(const std::string& name);

/// Heads that take part in diffusion; failed heads are dropped from every neighborhood.
using ActiveMask = std::vector<bool>;

/// Self-inclusive neighborhood of k restricted to active heads.
std::vector<std::size_t> active_neighborhood(const NetworkTopology& topology, std::size_t k,
                                             const ActiveMask& active);

struct DiffusionCoefficients {
  std::size_t head = 0;
  Eigen::VectorXd a; ///< a_{l,k}, length N
  std::size_t epoch = 0;
  bool fallback = false;    ///< median weights underflowed and were replaced by uniform ones
  bool regularized = false; ///< Q had to be shifted before solving
  double kkt_residual = 0.0;
};

/// a_{l,k} = deg_l / sum_{n in N_k} deg_n on N_k.
DiffusionCoefficients connectivity_weights(const NetworkTopology& topology, std::size_t k,
                                           const ActiveMask& active = {});

/// Per-dimension median of the neighborhood estimates (mean of the middle pair for an even
/// count).
Position neighborhood_median(const std::vector<Position>& estimates, const std::vector<std::size_t>& neighborhood);

/// a_{l,k} proportional to exp(-||x_l - median_k||^2 / gamma) on N_k.
DiffusionCoefficients median_weights(const std::vector<Position>& estimates, std::size_t k,
                                     const NetworkTopology& topology, double gamma,
                                     const ActiveMask& active = {});

/// [Q]_{m,n} = tr(W L_m^T L_n). Entries involving inactive heads are zero.
Eigen::MatrixXd build_q_matrix(const std::vector<LinearOperator>& operators, const Eigen::VectorXd& variances,
                               const ActiveMask& active = {});

/// argmin a^T Q a over the simplex restricted to N_k.
DiffusionCoefficients optimal_weights(const Eigen::MatrixXd& Q, std::size_t k, const NetworkTopology& topology,
                                      const ActiveMask& active = {});

struct DiffusionState {
  std::vector<Position> estimates;
  std::vector<LinearOperator> operators; ///< only needed by the optimal scheme
  ActiveMask active;
  std::size_t epoch = 0;
  bool converged = false;
};

struct DiffusionOptions {
  Scheme scheme = Scheme::connectivity;
  double epsilon = 1e-4;
  std::size_t max_epochs = 500;
  double gamma = 1.0;
  /// Optimal scheme: re-solve the coefficients every epoch, or only in the first one.
  bool reoptimize_every_epoch = true;
};

/// Everything an observer can see about one synchronous update.
struct EpochRecord {
  std::size_t epoch = 0; ///< 1 for the first update
  const std::vector<DiffusionCoefficients>* coefficients = nullptr; ///< one per head, empty for inactive heads
  const std::vector<Position>* previous = nullptr;
  const std::vector<Position>* current = nullptr;
  const ActiveMask* active = nullptr;
  double max_step = 0.0;
};

using EpochObserver = std::function<void(const EpochRecord&)>;

struct DiffusionStats {
  std::size_t fallbacks = 0;
  std::size_t regularizations = 0;
  double max_kkt_residual = 0.0;
};

struct DiffusionResult {
  DiffusionState state;
  DiffusionStats stats;
};

/// Runs synchronous diffusion until every active head moves by at most epsilon in one
/// epoch, or max_epochs updates have been made (state.converged stays false).
DiffusionResult diffuse(DiffusionState initial, const DiffusionOptions& opts, const NetworkTopology& topology,
                        const Eigen::VectorXd& variances, const EpochObserver& observer = {});

/// Initial state from per-head local estimates; std::nullopt marks a failed head.
DiffusionState make_diffusion_state(const std::vector<std::optional<LocalEstimate>>& locals);

} // namespace wusn
