#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "dals/linalg.hpp"
#include "dals/network.hpp"
#include "dals/random.hpp"

namespace dals::system {

/// Measurement model of one agent.
struct AgentModel {
  Matrix H;       // n_z x n_x
  Matrix R_true;  // n_z x n_z, symmetric PSD
  double sensing_range = std::numeric_limits<double>::infinity();
};

/// Shared LTI plant plus the per-agent measurement models.
struct LtiSystem {
  Matrix F;       // n_x x n_x
  Matrix Q_true;  // n_x x n_x, symmetric PSD
  Vector x0;
  std::vector<AgentModel> agents;

  Eigen::Index state_dim() const { return F.rows(); }

  /// Validates dimensions and PSD-ness; throws ConfigError / NumericalError.
  void validate() const;
};

/// 4x4 constant-turn transition over state [x, xdot, y, ydot]; the eta -> 0
/// limit is the constant-velocity matrix.
Matrix turning_rate_F(double eta, double Ts);

struct Trajectory {
  std::vector<Vector> states;                               // x_0 .. x_T
  std::vector<std::vector<std::optional<Vector>>> meas;     // [agent][step 1..T]
  std::vector<std::vector<network::SensorPose>> pose_log;   // [step 0..T][agent]; empty when static/unposed
  std::vector<network::Topology> topology_log;              // per step 1..T; mobile runs only

  const std::optional<Vector>& measurement(int agent, int step) const {
    return meas[static_cast<size_t>(agent)][static_cast<size_t>(step - 1)];
  }
  int steps() const { return static_cast<int>(states.size()) - 1; }
};

struct SimulateOptions {
  /// Initial sensor poses; enables sensing-range gating (and, when mobile,
  /// pursuit motion and per-step topology rebuilds).
  std::vector<network::SensorPose> sensor_poses;
  bool mobile = false;
  double Ts = 1.0;
  double comm_range = 0.0;  // > 0 with mobile => topology_log filled
  /// State components holding the planar target position (used for gating
  /// and as the pursuit fix).
  int pos_x_index = 0;
  int pos_y_index = 2;
};

/// Simulates x_{k+1} = F x_k + w_k, z_{i,k} = H_i x_k + v_{i,k} for k = 1..T.
/// A measurement is present iff the target is within the agent's sensing
/// range of the agent's current pose.  Noise draws come from independent
/// (seed, agent, step) substreams, so the output is reproducible and
/// evaluation-order independent.
Trajectory simulate_truth(const LtiSystem& sys, int T, std::uint64_t seed,
                          const SimulateOptions& opt = {});

}  // namespace dals::system
