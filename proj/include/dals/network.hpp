#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dals/linalg.hpp"

namespace dals::network {

/// Undirected communication graph over M agents; symmetric adjacency with a
/// zero diagonal.
struct Topology {
  int agent_count = 0;
  Eigen::MatrixXi adjacency;  // 0/1, symmetric, zero diagonal
};

/// Mobile sensor: planar position plus a constant cruise speed.
struct SensorPose {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;  // >= 0
};

/// Edge (i,j) iff the Euclidean distance between positions is <= r_c
/// (inclusive boundary).
Topology build_adjacency(const std::vector<Eigen::Vector2d>& positions, double r_c);

std::vector<int> neighbors(const Topology& t, int i);

/// Row sum of the adjacency matrix, i.e. the degree of agent i.
int connectivity(const Topology& t, int i);

/// Advances a sensor one step of length Ts toward the fix point at its cruise
/// speed.  A fix coinciding with the current position holds the sensor still
/// (the heading is undefined there).
SensorPose step_sensor(const SensorPose& p, const Eigen::Vector2d& target_fix, double Ts);

}  // namespace dals::network
