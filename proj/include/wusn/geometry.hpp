#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace wusn {

/// 2-D Cartesian position in meters.
using Position = Eigen::Vector2d;

/// Node identifier. Heads occupy ids [0, N); the m-th sensor of head k has id N + k*M + m.
using NodeId = std::size_t;

/// Cluster-head grid with the sensors attached to each head.
///
/// Adjacency is stored symmetric and irreflexive. The neighborhood used by the
/// diffusion and weighting rules is self-inclusive: neighborhood(k) = {k} u adjacency(k),
/// and degree(k) is the size of that set.
class NetworkTopology {
public:
  NetworkTopology(std::vector<Position> heads, std::vector<std::vector<Position>> sensors,
                  std::vector<std::vector<std::size_t>> adjacency);

  std::size_t head_count() const { return heads_.size(); }
  std::size_t sensors_per_head() const { return sensors_per_head_; }
  std::size_t sensor_count() const { return head_count() * sensors_per_head_; }
  std::size_t node_count() const { return head_count() + sensor_count(); }

  const std::vector<Position>& heads() const { return heads_; }
  const std::vector<std::vector<Position>>& sensors() const { return sensors_; }
  const std::vector<std::size_t>& adjacency(std::size_t head) const { return adjacency_.at(head); }

  /// Sorted self-inclusive neighborhood of a head.
  const std::vector<std::size_t>& neighborhood(std::size_t head) const { return neighborhoods_.at(head); }
  std::size_t degree(std::size_t head) const { return neighborhoods_.at(head).size(); }

  NodeId sensor_id(std::size_t head, std::size_t index) const;
  const Position& position(NodeId node) const;
  /// Head that owns a node (a head owns itself).
  std::size_t owner(NodeId node) const;

  /// Center of the bounding box of all nodes.
  Position deployment_center() const;

private:
  std::vector<Position> heads_;
  std::vector<std::vector<Position>> sensors_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::vector<std::size_t>> neighborhoods_;
  std::size_t sensors_per_head_ = 0;
};

struct GridNetworkConfig {
  std::size_t n_heads = 16;
  double spacing = 50.0;
  std::size_t sensors_per_head = 10;
  double placement_radius = 10.0;
  double neighbor_radius = 75.0;
  std::uint64_t seed = 0;
};

/// Heads on a sqrt(N) x sqrt(N) grid anchored at the origin (head id = row * side + col);
/// sensors uniform on the disk of placement_radius around their head; heads adjacent when
/// their distance is at most neighbor_radius. Throws ConfigError on a non-square head count.
NetworkTopology build_grid_network(const GridNetworkConfig& cfg);

double distance(const Position& a, const Position& b);

/// ||source - xi|| - ||source - xj||.
double true_range_difference(const Position& source, const Position& xi, const Position& xj);

/// CSV dump with header `kind,head_id,sensor_id,x1,x2`.
void write_topology_csv(std::ostream& out, const NetworkTopology& topology);

} // namespace wusn
