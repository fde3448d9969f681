#include "wusn/diffusion.hpp"
#include "wusn/errors.hpp"
#include "wusn/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wusn;

namespace {

NetworkTopology grid(std::size_t n, std::size_t m, std::uint64_t seed, double neighbor_radius = 75.0) {
  GridNetworkConfig c;
  c.n_heads = n;
  c.sensors_per_head = m;
  c.seed = seed;
  c.neighbor_radius = neighbor_radius;
  return build_grid_network(c);
}

// Heads on a line: 0 - 1 - 2, plus head 3 connected to 1.
NetworkTopology star_line() {
  std::vector<Position> heads{{0, 0}, {50, 0}, {100, 0}, {50, 50}};
  std::vector<std::vector<Position>> sensors(4, std::vector<Position>{});
  for (std::size_t k = 0; k < 4; ++k) sensors[k] = {heads[k] + Position(3, 4)};
  return NetworkTopology(heads, sensors, {{1}, {0, 2, 3}, {1}, {1}});
}

struct Trial {
  NetworkTopology topology;
  MeasurementSet meas;
  std::vector<std::optional<LocalEstimate>> locals;
};

Trial make_trial(std::uint64_t seed, std::size_t n = 16, std::size_t m = 10, double sigma = 1.0) {
  Rng rng = make_rng(seed);
  Trial t{grid(n, m, rng()), {}, {}};
  t.meas = simulate_tdoa_measurements(t.topology, {60, 70}, sigma, rng);
  const SelectionWeights sw = build_selection_weights(t.topology, t.meas);
  WlsOptions opts;
  opts.init = t.topology.deployment_center();
  for (std::size_t k = 0; k < n; ++k) {
    try {
      t.locals.push_back(local_wls(k, t.meas, sw, t.topology, opts));
    } catch (const EstimationError&) {
      t.locals.push_back(std::nullopt);
    }
  }
  return t;
}

void expect_on_simplex(const DiffusionCoefficients& c, const NetworkTopology& topo) {
  EXPECT_NEAR(c.a.sum(), 1.0, 1e-12);
  EXPECT_GE(c.a.minCoeff(), 0.0);
  const auto& nb = topo.neighborhood(c.head);
  for (Eigen::Index l = 0; l < c.a.size(); ++l) {
    if (c.a(l) != 0.0) {
      EXPECT_NE(std::find(nb.begin(), nb.end(), static_cast<std::size_t>(l)), nb.end());
    }
  }
}

} // namespace

TEST(SchemeNames, RoundTrip) {
  for (Scheme s : {Scheme::connectivity, Scheme::median, Scheme::optimal}) EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_EQ(to_string(Scheme::median), "wei");
  EXPECT_THROW(parse_scheme("foo"), ConfigError);
}

TEST(ConnectivityWeights, Examples) {
  const NetworkTopology line = star_line();
  // N_0 = {0, 1}, degrees {2, 4}
  const DiffusionCoefficients c0 = connectivity_weights(line, 0);
  EXPECT_NEAR(c0.a(0), 2.0 / 6.0, 1e-15);
  EXPECT_NEAR(c0.a(1), 4.0 / 6.0, 1e-15);

  // N_k = {k, l1, l2} with degrees {3, 2, 2}
  const NetworkTopology path({{0, 0}, {50, 0}, {100, 0}}, {{{1, 1}}, {{51, 1}}, {{101, 1}}}, {{1}, {0, 2}, {1}});
  const DiffusionCoefficients c1 = connectivity_weights(path, 1);
  EXPECT_NEAR(c1.a(1), 3.0 / 7.0, 1e-15);
  EXPECT_NEAR(c1.a(0), 2.0 / 7.0, 1e-15);
  EXPECT_NEAR(c1.a(2), 2.0 / 7.0, 1e-15);

  // equal degrees on a 2 x 2 grid -> uniform
  const NetworkTopology g = grid(4, 1, 1, 55.0);
  const DiffusionCoefficients c = connectivity_weights(g, 2);
  for (auto l : g.neighborhood(2)) EXPECT_NEAR(c.a(static_cast<Eigen::Index>(l)), 1.0 / 3.0, 1e-15);

  const NetworkTopology single = grid(1, 1, 1);
  EXPECT_EQ(connectivity_weights(single, 0).a(0), 1.0);
}

TEST(ConnectivityWeights, InactiveHeadsDropOut) {
  const NetworkTopology line = star_line();
  const DiffusionCoefficients c = connectivity_weights(line, 1, {true, true, false, true});
  EXPECT_EQ(c.a(2), 0.0);
  // active degrees: head 0 -> 2, head 1 -> 3, head 3 -> 2
  EXPECT_NEAR(c.a(1), 3.0 / 7.0, 1e-15);
  EXPECT_NEAR(c.a(0), 2.0 / 7.0, 1e-15);
}

TEST(NeighborhoodMedian, OddAndEven) {
  const std::vector<Position> est{{0, 0}, {1, 1}, {10, 10}, {4, -2}};
  EXPECT_EQ(neighborhood_median(est, {0, 1, 2}), Position(1, 1));
  EXPECT_EQ(neighborhood_median(est, {0, 1, 2, 3}), Position(2.5, 0.5));
}

TEST(MedianWeights, Example) {
  const NetworkTopology path({{0, 0}, {50, 0}, {100, 0}}, {{{1, 1}}, {{51, 1}}, {{101, 1}}}, {{1}, {0, 2}, {1}});
  const std::vector<Position> est{{0, 0}, {1, 1}, {10, 10}};
  const DiffusionCoefficients c = median_weights(est, 1, path, 1.0);
  const double total = std::exp(-2.0) + 1.0 + std::exp(-162.0);
  EXPECT_NEAR(c.a(0), std::exp(-2.0) / total, 1e-15);
  EXPECT_NEAR(c.a(1), 1.0 / total, 1e-15);
  EXPECT_NEAR(c.a(2), std::exp(-162.0) / total, 1e-80);
  EXPECT_LT(c.a(2), c.a(0));
  EXPECT_FALSE(c.fallback);
}

TEST(MedianWeights, IdenticalEstimatesGiveUniform) {
  const NetworkTopology g = grid(16, 1, 1);
  const std::vector<Position> est(16, Position(7, 8));
  const DiffusionCoefficients c = median_weights(est, 5, g, 0.3);
  for (auto l : g.neighborhood(5)) EXPECT_NEAR(c.a(static_cast<Eigen::Index>(l)), 1.0 / 9.0, 1e-15);
}

TEST(MedianWeights, UnderflowFallsBackToUniform) {
  const NetworkTopology path({{0, 0}, {50, 0}, {100, 0}}, {{{1, 1}}, {{51, 1}}, {{101, 1}}}, {{1}, {0, 2}, {1}});
  const std::vector<Position> est{{0, 1000}, {1000, 0}, {2000, 2000}};
  const DiffusionCoefficients c = median_weights(est, 1, path, 1.0);
  EXPECT_TRUE(c.fallback);
  for (Eigen::Index l = 0; l < 3; ++l) EXPECT_NEAR(c.a(l), 1.0 / 3.0, 1e-15);
}

TEST(MedianWeights, CloserNeighborsWeighMore) {
  Rng rng = make_rng(41);
  std::normal_distribution<double> g(0, 2);
  const NetworkTopology topo = grid(16, 1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Position> est(16);
    for (auto& e : est) e = Position(60 + g(rng), 70 + g(rng));
    for (std::size_t k = 0; k < 16; ++k) {
      const DiffusionCoefficients c = median_weights(est, k, topo, 2.0);
      expect_on_simplex(c, topo);
      const Position center = neighborhood_median(est, topo.neighborhood(k));
      for (auto l : topo.neighborhood(k)) {
        for (auto m : topo.neighborhood(k)) {
          if ((est[l] - center).norm() < (est[m] - center).norm()) {
            EXPECT_GE(c.a(static_cast<Eigen::Index>(l)), c.a(static_cast<Eigen::Index>(m)));
          }
        }
      }
    }
  }
}

TEST(MedianWeights, InvalidGamma) {
  const NetworkTopology g = grid(4, 1, 1);
  EXPECT_THROW(median_weights(std::vector<Position>(4), 0, g, 0.0), ConfigError);
}

TEST(QMatrix, SingleOperatorTrace) {
  Rng rng = make_rng(42);
  std::normal_distribution<double> g;
  LinearOperator L(2, 5);
  for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = g(rng);
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(5, 0.5, 2.5);
  const Eigen::MatrixXd Q = build_q_matrix({L}, w);
  EXPECT_NEAR(Q(0, 0), (L * w.asDiagonal() * L.transpose()).trace(), 1e-12);
}

TEST(QMatrix, IdenticalOperators) {
  LinearOperator L(2, 3);
  L << 1, 2, 3, 4, 5, 6;
  const Eigen::MatrixXd Q = build_q_matrix({L, L}, Eigen::Vector3d::Ones());
  EXPECT_TRUE(Q.isApprox(Eigen::Matrix2d::Constant(Q(0, 0))));
}

TEST(QMatrix, MatchesFusedEstimatorVariance) {
  Rng rng = make_rng(43);
  std::normal_distribution<double> g;
  const int K = 6;
  std::vector<LinearOperator> ops(3, LinearOperator(2, K));
  for (auto& L : ops) {
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = g(rng);
  }
  Eigen::VectorXd w(K);
  w << 0.5, 1, 2, 1, 3, 0.25;
  const Eigen::Vector3d a(0.2, 0.5, 0.3);
  const double predicted = a.dot(build_q_matrix(ops, w) * a);

  const LinearOperator fused = a(0) * ops[0] + a(1) * ops[1] + a(2) * ops[2];
  double sum_sq = 0;
  const int draws = 100000;
  Eigen::VectorXd n(K);
  for (int d = 0; d < draws; ++d) {
    for (int i = 0; i < K; ++i) n(i) = std::sqrt(w(i)) * g(rng);
    sum_sq += (fused * n).squaredNorm();
  }
  EXPECT_NEAR(sum_sq / draws / predicted, 1.0, 0.05);
}

TEST(QMatrix, InactiveRowsAreZero) {
  LinearOperator L(2, 3);
  L << 1, 2, 3, 4, 5, 6;
  const Eigen::MatrixXd Q = build_q_matrix({L, LinearOperator{}, L}, Eigen::Vector3d::Ones(), {true, false, true});
  EXPECT_EQ(Q.row(1).norm(), 0.0);
  EXPECT_EQ(Q.col(1).norm(), 0.0);
  EXPECT_GT(Q(2, 0), 0.0);
  EXPECT_THROW(build_q_matrix({L, LinearOperator{}, L}, Eigen::Vector3d::Ones()), ConfigError);
}

TEST(OptimalWeights, Examples) {
  const NetworkTopology path({{0, 0}, {50, 0}, {100, 0}}, {{{1, 1}}, {{51, 1}}, {{101, 1}}}, {{1}, {0, 2}, {1}});
  const DiffusionCoefficients c = optimal_weights(Eigen::Matrix3d::Identity(), 1, path);
  for (Eigen::Index l = 0; l < 3; ++l) EXPECT_NEAR(c.a(l), 1.0 / 3.0, 1e-12);

  // head 0 sees {0, 1}; the restricted Q is diag{1, 2}
  const DiffusionCoefficients c0 = optimal_weights(Eigen::Vector3d(1, 2, 5).asDiagonal(), 0, path);
  EXPECT_NEAR(c0.a(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(c0.a(1), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(c0.a(2), 0.0);
}

TEST(OptimalWeights, NoWorseThanConnectivity) {
  const Trial t = make_trial(44);
  DiffusionState st = make_diffusion_state(t.locals);
  const Eigen::MatrixXd Q = build_q_matrix(st.operators, t.meas.variances, st.active);
  for (std::size_t k = 0; k < 16; ++k) {
    const Eigen::VectorXd opt = optimal_weights(Q, k, t.topology).a;
    const Eigen::VectorXd con = connectivity_weights(t.topology, k).a;
    EXPECT_LE(opt.dot(Q * opt), con.dot(Q * con) * (1 + 1e-12)) << k;
  }
}

TEST(Diffuse, IdenticalEstimatesStop) {
  const NetworkTopology g = grid(9, 3, 1);
  DiffusionState st;
  st.estimates.assign(9, Position(5, 6));
  for (Scheme s : {Scheme::connectivity, Scheme::median}) {
    DiffusionOptions opts;
    opts.scheme = s;
    const DiffusionResult r = diffuse(st, opts, g, Eigen::VectorXd::Ones(27));
    EXPECT_TRUE(r.state.converged);
    EXPECT_EQ(r.state.epoch, 1u);
    for (const auto& e : r.state.estimates) EXPECT_TRUE(e.isApprox(Position(5, 6), 1e-15));
  }
}

TEST(Diffuse, IsolatedHeadNeverMoves) {
  const NetworkTopology g = grid(4, 3, 1, 10.0);
  DiffusionState st;
  st.estimates = {{1, 2}, {3, 4}, {5, 6}, {7, 8}};
  DiffusionOptions opts;
  const DiffusionResult r = diffuse(st, opts, g, Eigen::VectorXd::Ones(12));
  EXPECT_EQ(r.state.estimates, st.estimates);
  EXPECT_TRUE(r.state.converged);
}

TEST(Diffuse, ConnectedGraphReachesConsensus) {
  const Trial t = make_trial(45);
  for (Scheme s : {Scheme::connectivity, Scheme::median, Scheme::optimal}) {
    DiffusionOptions opts;
    opts.scheme = s;
    opts.gamma = 10.0;
    opts.epsilon = 1e-8;
    opts.max_epochs = 5000;
    const DiffusionResult r = diffuse(make_diffusion_state(t.locals), opts, t.topology, t.meas.variances);
    EXPECT_TRUE(r.state.converged) << to_string(s);
    for (const auto& e : r.state.estimates) EXPECT_LT((e - r.state.estimates[0]).norm(), 1e-5) << to_string(s);
  }
}

TEST(Diffuse, InvariantsHoldEveryEpoch) {
  for (std::uint64_t seed = 50; seed < 55; ++seed) {
    const Trial t = make_trial(seed);
    for (Scheme s : {Scheme::connectivity, Scheme::median, Scheme::optimal}) {
      DiffusionOptions opts;
      opts.scheme = s;
      std::size_t epochs_seen = 0;
      auto observer = [&](const EpochRecord& rec) {
        ++epochs_seen;
        EXPECT_EQ(rec.epoch, epochs_seen);
        Position lo = Position::Constant(1e300), hi = Position::Constant(-1e300);
        Position nlo = lo, nhi = hi;
        for (std::size_t k = 0; k < 16; ++k) {
          if (!(*rec.active)[k]) continue;
          expect_on_simplex((*rec.coefficients)[k], t.topology);
          lo = lo.cwiseMin((*rec.previous)[k]);
          hi = hi.cwiseMax((*rec.previous)[k]);
          nlo = nlo.cwiseMin((*rec.current)[k]);
          nhi = nhi.cwiseMax((*rec.current)[k]);
        }
        EXPECT_TRUE((nlo.array() >= lo.array() - 1e-9).all());
        EXPECT_TRUE((nhi.array() <= hi.array() + 1e-9).all());
      };
      const DiffusionResult r =
          diffuse(make_diffusion_state(t.locals), opts, t.topology, t.meas.variances, observer);
      EXPECT_EQ(epochs_seen, r.state.epoch);
    }
  }
}

TEST(Diffuse, OperatorUpdateKeepsUnbiasedness) {
  // all operators share one linearization point, so every mix stays a left inverse of P
  const NetworkTopology topo = grid(9, 4, 3);
  Rng rng = make_rng(46);
  const MeasurementSet meas = simulate_tdoa_measurements(topo, {60, 70}, 1.0, rng);
  const Jacobian P = residual_and_jacobian({60, 70}, meas, topo).P;
  const SelectionWeights sw = build_selection_weights(topo, meas);
  DiffusionState st;
  for (std::size_t k = 0; k < 9; ++k) {
    st.operators.push_back(weighted_pseudo_inverse(P, sw.selector(k)));
    st.estimates.push_back(Position(60, 70) + st.operators.back() * (meas.values - model_range_differences({60, 70}, meas, topo)));
  }
  DiffusionOptions opts;
  opts.scheme = Scheme::optimal;
  const DiffusionResult r = diffuse(st, opts, topo, meas.variances);
  for (const auto& L : r.state.operators) EXPECT_TRUE((L * P).isApprox(Eigen::Matrix2d::Identity(), 1e-9));
}

TEST(Diffuse, FailedHeadsAreFrozenAndExcluded) {
  Trial t = make_trial(47);
  t.locals[5].reset();
  for (Scheme s : {Scheme::connectivity, Scheme::median, Scheme::optimal}) {
    DiffusionOptions opts;
    opts.scheme = s;
    auto observer = [&](const EpochRecord& rec) {
      for (std::size_t k = 0; k < 16; ++k) {
        if ((*rec.active)[k]) {
          EXPECT_EQ((*rec.coefficients)[k].a(5), 0.0);
        }
      }
    };
    const DiffusionResult r = diffuse(make_diffusion_state(t.locals), opts, t.topology, t.meas.variances, observer);
    EXPECT_FALSE(r.state.active[5]);
    EXPECT_EQ(r.state.estimates[5], Position::Zero());
    EXPECT_TRUE(r.state.converged);
  }
}

TEST(Diffuse, OnceOnlyModeKeepsFirstCoefficients) {
  const Trial t = make_trial(48);
  DiffusionOptions opts;
  opts.scheme = Scheme::optimal;
  opts.reoptimize_every_epoch = false;
  std::vector<Eigen::VectorXd> first;
  auto observer = [&](const EpochRecord& rec) {
    if (rec.epoch == 1) {
      for (const auto& c : *rec.coefficients) first.push_back(c.a);
      return;
    }
    for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ((*rec.coefficients)[k].a, first[k]);
  };
  const DiffusionResult r = diffuse(make_diffusion_state(t.locals), opts, t.topology, t.meas.variances, observer);
  EXPECT_GT(r.state.epoch, 1u);
}

TEST(Diffuse, MaxEpochsFlagsNonConvergence) {
  const Trial t = make_trial(49);
  DiffusionOptions opts;
  opts.max_epochs = 2;
  opts.epsilon = 1e-12;
  const DiffusionResult r = diffuse(make_diffusion_state(t.locals), opts, t.topology, t.meas.variances);
  EXPECT_FALSE(r.state.converged);
  EXPECT_EQ(r.state.epoch, 2u);
}

TEST(Diffuse, Errors) {
  const NetworkTopology g = grid(4, 3, 1);
  DiffusionState st;
  st.estimates.assign(4, Position::Zero());
  DiffusionOptions opts;
  opts.epsilon = 0.0;
  EXPECT_THROW(diffuse(st, opts, g, Eigen::VectorXd::Ones(12)), ConfigError);
  opts = {};
  opts.scheme = Scheme::optimal;
  EXPECT_THROW(diffuse(st, opts, g, Eigen::VectorXd::Ones(12)), ConfigError);
  st.estimates.resize(3);
  EXPECT_THROW(diffuse(st, {}, g, Eigen::VectorXd::Ones(12)), ConfigError);
}
