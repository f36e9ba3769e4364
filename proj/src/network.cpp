#include "dals/network.hpp"

#include <cmath>

namespace dals::network {

Topology build_adjacency(const std::vector<Eigen::Vector2d>& positions, double r_c) {
  if (r_c <= 0.0) throw ConfigError("build_adjacency: communication range must be positive");
  const int m = static_cast<int>(positions.size());
  Topology t;
  t.agent_count = m;
  t.adjacency = Eigen::MatrixXi::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const double d = (positions[static_cast<size_t>(i)] - positions[static_cast<size_t>(j)]).norm();
      if (d <= r_c) {
        t.adjacency(i, j) = 1;
        t.adjacency(j, i) = 1;
      }
    }
  return t;
}

std::vector<int> neighbors(const Topology& t, int i) {
  if (i < 0 || i >= t.agent_count) throw ConfigError("neighbors: agent index out of range");
  std::vector<int> out;
  for (int j = 0; j < t.agent_count; ++j)
    if (t.adjacency(i, j) != 0) out.push_back(j);
  return out;
}

int connectivity(const Topology& t, int i) {
  if (i < 0 || i >= t.agent_count) throw ConfigError("connectivity: agent index out of range");
  return t.adjacency.row(i).sum();
}

SensorPose step_sensor(const SensorPose& p, const Eigen::Vector2d& target_fix, double Ts) {
  if (Ts <= 0.0) throw ConfigError("step_sensor: Ts must be positive");
  const double dx = target_fix.x() - p.x;
  const double dy = target_fix.y() - p.y;
  SensorPose next = p;
  if (dx == 0.0 && dy == 0.0) return next;  // degenerate heading, hold position
  const double heading = std::atan2(dy, dx);
  next.x += p.speed * Ts * std::cos(heading);
  next.y += p.speed * Ts * std::sin(heading);
  return next;
}

}  // namespace dals::network
