#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dals/fusion.hpp"
#include "dals/system.hpp"

namespace dals::harness {

/// Experiment configuration: plant, agents, topology mode, window sizes and
/// solver parameters.  Built-ins cover the shipped benchmarks; a scenario
/// file can override any field.
struct Scenario {
  std::string name = "custom";

  // Plant: either an explicit F or turning-rate parameters.
  Matrix F;
  bool use_turning_rate = false;
  double eta = 0.0;
  double Ts = 1.0;
  Matrix Q_true;
  Vector x0;

  struct Agent {
    Matrix H;
    Matrix R_true;
    double sensing_range = std::numeric_limits<double>::infinity();
    double px = 0.0, py = 0.0;  // initial pose (mobile/gated scenarios)
  };
  std::vector<Agent> agents;

  bool mobile = false;
  double comm_range = 0.0;  // r_c; 0 => static fully connected
  double sensor_speed = 0.0;

  int horizon = 1000;
  int burn_in = 50;
  int tau = 100;
  int lags = 15;
  int segment_warmup = 0;  // post-gap innovations dropped (gated scenarios)
  double mu = 0.01;
  double nu = 5e-3;
  int trials = 500;
  std::uint64_t seed = 1;

  std::string q_kind = "full-symmetric";  // full-symmetric | diagonal | scalar
  std::string r_kind = "full-symmetric";
  std::string coupling = "shared-q";      // shared-q | block-diag

  // Initial hypothesis for the iterative loop; empty => true values.
  Matrix Q0;
  std::vector<Matrix> R0;

  system::LtiSystem to_system() const;
  std::vector<network::SensorPose> initial_poses() const;
  linalg::StructureMap q_structure() const;
  linalg::StructureMap r_structure(int agent) const;
  filter::NoiseHypothesis initial_hypothesis(const std::vector<int>& participants) const;
  fusion::DalsParams dals_params() const;

  void validate() const;
};

/// Scalar 10-sensor fully connected benchmark: F = -0.8, H_i = 1, Q = 8,
/// R_i = i.
Scenario fig1_scenario();

/// Static 3-sensor network on the 2-dim plant F = 0.8 I, Q = 4 I.
Scenario ssn_scenario();

/// 10 mobile sensors pursuing a constant-turn target.
Scenario msn_scenario();

Scenario builtin_scenario(const std::string& name);

/// Parses a `key = value` scenario file.  Matrices use [a,b;c,d], vectors
/// [a,b].  Unknown keys are rejected with ConfigError.
Scenario load_scenario_file(const std::string& path);

}  // namespace dals::harness
