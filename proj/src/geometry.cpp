#include "wusn/geometry.hpp"

#include "wusn/errors.hpp"
#include "wusn/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace wusn {

NetworkTopology::NetworkTopology(std::vector<Position> heads, std::vector<std::vector<Position>> sensors,
                                 std::vector<std::vector<std::size_t>> adjacency)
    : heads_(std::move(heads)), sensors_(std::move(sensors)), adjacency_(std::move(adjacency)) {
  const std::size_t n = heads_.size();
  if (sensors_.size() != n || adjacency_.size() != n) {
    throw ConfigError("topology: heads, sensors and adjacency must have one entry per head");
  }
  sensors_per_head_ = n == 0 ? 0 : sensors_.front().size();
  for (const auto& s : sensors_) {
    if (s.size() != sensors_per_head_) {
      throw ConfigError("topology: every head must own the same number of sensors");
    }
  }
  neighborhoods_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& adj = adjacency_[k];
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    for (auto l : adj) {
      if (l >= n || l == k) {
        throw ConfigError("topology: adjacency must be irreflexive and index existing heads");
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (auto l : adjacency_[k]) {
      if (!std::binary_search(adjacency_[l].begin(), adjacency_[l].end(), k)) {
        throw ConfigError("topology: adjacency must be symmetric");
      }
    }
    auto& nb = neighborhoods_[k];
    nb = adjacency_[k];
    nb.insert(std::lower_bound(nb.begin(), nb.end(), k), k);
  }
}

NodeId NetworkTopology::sensor_id(std::size_t head, std::size_t index) const {
  return head_count() + head * sensors_per_head_ + index;
}

const Position& NetworkTopology::position(NodeId node) const {
  if (node < head_count()) return heads_[node];
  const std::size_t s = node - head_count();
  return sensors_.at(s / sensors_per_head_).at(s % sensors_per_head_);
}

std::size_t NetworkTopology::owner(NodeId node) const {
  if (node < head_count()) return node;
  return (node - head_count()) / sensors_per_head_;
}

Position NetworkTopology::deployment_center() const {
  if (heads_.empty()) return Position::Zero();
  Position lo = heads_.front();
  Position hi = heads_.front();
  auto grow = [&](const Position& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& h : heads_) grow(h);
  for (const auto& cluster : sensors_) {
    for (const auto& s : cluster) grow(s);
  }
  return 0.5 * (lo + hi);
}

NetworkTopology build_grid_network(const GridNetworkConfig& cfg) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(cfg.n_heads))));
  if (cfg.n_heads == 0 || side * side != cfg.n_heads) {
    throw ConfigError("grid network: n_heads must be a positive perfect square, got " +
                      std::to_string(cfg.n_heads));
  }
  if (!(cfg.spacing > 0.0) || !(cfg.placement_radius > 0.0)) {
    throw ConfigError("grid network: spacing and placement_radius must be positive");
  }

  std::vector<Position> heads;
  heads.reserve(cfg.n_heads);
  for (std::size_t row = 0; row < side; ++row) {
    for (std::size_t col = 0; col < side; ++col) {
      heads.emplace_back(cfg.spacing * static_cast<double>(col), cfg.spacing * static_cast<double>(row));
    }
  }

  Rng rng = make_rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<Position>> sensors(cfg.n_heads);
  for (std::size_t k = 0; k < cfg.n_heads; ++k) {
    sensors[k].reserve(cfg.sensors_per_head);
    for (std::size_t m = 0; m < cfg.sensors_per_head; ++m) {
      // area-uniform: radius by inverse CDF
      const double r = cfg.placement_radius * std::sqrt(unit(rng));
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      sensors[k].push_back(heads[k] + r * Position(std::cos(theta), std::sin(theta)));
    }
  }

  std::vector<std::vector<std::size_t>> adjacency(cfg.n_heads);
  for (std::size_t k = 0; k < cfg.n_heads; ++k) {
    for (std::size_t l = k + 1; l < cfg.n_heads; ++l) {
      if (distance(heads[k], heads[l]) <= cfg.neighbor_radius) {
        adjacency[k].push_back(l);
        adjacency[l].push_back(k);
      }
    }
  }
  return NetworkTopology(std::move(heads), std::move(sensors), std::move(adjacency));
}

double distance(const Position& a, const Position& b) { return (a - b).norm(); }

double true_range_difference(const Position& source, const Position& xi, const Position& xj) {
  return distance(source, xi) - distance(source, xj);
}

void write_topology_csv(std::ostream& out, const NetworkTopology& topology) {
  const auto precision = out.precision(9);
  out << "kind,head_id,sensor_id,x1,x2\n";
  for (std::size_t k = 0; k < topology.head_count(); ++k) {
    const auto& h = topology.heads()[k];
    out << "head," << k << ",," << h.x() << ',' << h.y() << '\n';
    for (std::size_t m = 0; m < topology.sensors()[k].size(); ++m) {
      const auto& s = topology.sensors()[k][m];
      out << "sensor," << k << ',' << m << ',' << s.x() << ',' << s.y() << '\n';
    }
  }
  out.precision(precision);
}

} // namespace wusn
