#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dals/system.hpp"

using namespace dals;
using namespace dals::system;

TEST_CASE("turning-rate transition matrix") {
  SUBCASE("eta = 0 is the constant-velocity model") {
    Matrix f = turning_rate_F(0.0, 1.0);
    Matrix cv(4, 4);
    cv << 1, 1, 0, 0,
          0, 1, 0, 0,
          0, 0, 1, 1,
          0, 0, 0, 1;
    CHECK((f - cv).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("quarter-turn entries") {
    const double eta = std::numbers::pi / 2.0;
    Matrix f = turning_rate_F(eta, 1.0);
    const double s = std::sin(eta) / eta;       // 2/pi
    const double c1 = (1.0 - std::cos(eta)) / eta;  // 2/pi
    CHECK(f(0, 0) == doctest::Approx(1.0));
    CHECK(f(0, 1) == doctest::Approx(s).epsilon(1e-12));
    CHECK(f(0, 3) == doctest::Approx(-c1).epsilon(1e-12));
    CHECK(f(1, 1) == doctest::Approx(std::cos(eta)).epsilon(1e-12));
    CHECK(f(1, 3) == doctest::Approx(-std::sin(eta)).epsilon(1e-12));
    CHECK(f(2, 1) == doctest::Approx(c1).epsilon(1e-12));
    CHECK(f(2, 3) == doctest::Approx(s).epsilon(1e-12));
    CHECK(f(3, 1) == doctest::Approx(std::sin(eta)).epsilon(1e-12));
    CHECK(f(3, 3) == doctest::Approx(std::cos(eta)).epsilon(1e-12));
  }
  SUBCASE("small eta is close to the CV limit") {
    Matrix f = turning_rate_F(std::numbers::pi / 60.0, 1.0);
    Matrix cv = turning_rate_F(0.0, 1.0);
    CHECK((f - cv).cwiseAbs().maxCoeff() < 0.06);
    CHECK((f - cv).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("non-positive sample time is rejected") {
    CHECK_THROWS_AS(turning_rate_F(0.1, 0.0), ConfigError);
    CHECK_THROWS_AS(turning_rate_F(0.1, -1.0), ConfigError);
  }
}

TEST_CASE("system validation") {
  LtiSystem sys;
  sys.F = Matrix::Constant(1, 1, 0.5);
  sys.Q_true = Matrix::Constant(1, 1, 1.0);
  sys.x0 = Vector::Zero(1);
  AgentModel a;
  a.H = Matrix::Constant(1, 1, 1.0);
  a.R_true = Matrix::Constant(1, 1, 1.0);
  sys.agents.push_back(a);
  CHECK_NOTHROW(sys.validate());

  SUBCASE("indefinite Q is rejected") {
    LtiSystem bad = sys;
    bad.Q_true = Matrix::Constant(1, 1, -1.0);
    CHECK_THROWS(bad.validate());
  }
  SUBCASE("H column mismatch is rejected") {
    LtiSystem bad = sys;
    bad.agents[0].H = Matrix::Ones(1, 2);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("noiseless simulation follows the deterministic recursion") {
  LtiSystem sys;
  sys.F = Matrix(2, 2);
  sys.F << 0.9, 0.1, 0.0, 0.8;
  sys.Q_true = Matrix::Zero(2, 2);
  sys.x0 = Vector(2);
  sys.x0 << 1.0, -2.0;
  AgentModel a;
  a.H = Matrix(1, 2);
  a.H << 1.0, 1.0;
  a.R_true = Matrix::Zero(1, 1);
  sys.agents.push_back(a);

  Trajectory traj = simulate_truth(sys, 10, 5);
  REQUIRE(traj.steps() == 10);
  Vector x = sys.x0;
  for (int k = 1; k <= 10; ++k) {
    x = sys.F * x;
    CHECK((traj.states[static_cast<size_t>(k)] - x).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(traj.measurement(0, k).has_value());
    CHECK(((*traj.measurement(0, k)) - a.H * x).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("simulation is deterministic in the seed") {
  LtiSystem sys;
  sys.F = Matrix::Constant(1, 1, -0.8);
  sys.Q_true = Matrix::Constant(1, 1, 8.0);
  sys.x0 = Vector::Zero(1);
  for (int i = 0; i < 2; ++i) {
    AgentModel a;
    a.H = Matrix::Constant(1, 1, 1.0);
    a.R_true = Matrix::Constant(1, 1, 1.0 + i);
    sys.agents.push_back(a);
  }
  Trajectory a = simulate_truth(sys, 50, 99);
  Trajectory b = simulate_truth(sys, 50, 99);
  Trajectory c = simulate_truth(sys, 50, 100);
  bool identical = true, differs = false;
  for (int k = 1; k <= 50; ++k) {
    if ((*a.measurement(0, k) - *b.measurement(0, k)).cwiseAbs().maxCoeff() != 0.0)
      identical = false;
    if ((*a.measurement(0, k) - *c.measurement(0, k)).cwiseAbs().maxCoeff() != 0.0)
      differs = true;
  }
  CHECK(identical);
  CHECK(differs);
  // Agents draw from independent streams: same step, different noise.
  int equal_steps = 0;
  for (int k = 1; k <= 50; ++k)
    if ((*a.measurement(0, k) - *a.measurement(1, k)).cwiseAbs().maxCoeff() == 0.0)
      ++equal_steps;
  CHECK(equal_steps == 0);
}

TEST_CASE("scalar stationary variance matches the Lyapunov value") {
  // x_{k+1} = -0.8 x_k + w, var(w) = 8 -> stationary var = 8 / (1 - 0.64).
  LtiSystem sys;
  sys.F = Matrix::Constant(1, 1, -0.8);
  sys.Q_true = Matrix::Constant(1, 1, 8.0);
  sys.x0 = Vector::Zero(1);
  AgentModel a;
  a.H = Matrix::Constant(1, 1, 1.0);
  a.R_true = Matrix::Zero(1, 1);
  sys.agents.push_back(a);

  const int t = 100000;
  Trajectory traj = simulate_truth(sys, t, 4242);
  double acc = 0.0;
  for (int k = 200; k <= t; ++k) acc += traj.states[static_cast<size_t>(k)](0) *
                                        traj.states[static_cast<size_t>(k)](0);
  const double var = acc / (t - 199);
  CHECK(var == doctest::Approx(8.0 / 0.36).epsilon(0.03));
}

TEST_CASE("sensing-range gating is inclusive") {
  LtiSystem sys;
  sys.F = Matrix::Identity(4, 4);
  sys.Q_true = Matrix::Zero(4, 4);
  sys.x0 = Vector::Zero(4);  // target pinned at the origin
  AgentModel a;
  a.H = Matrix(2, 4);
  a.H << 1, 0, 0, 0, 0, 0, 1, 0;
  a.R_true = Matrix::Zero(2, 2);
  sys.agents.push_back(a);

  SimulateOptions opt;
  network::SensorPose pose;
  pose.x = 3.0;
  pose.y = 4.0;  // distance 5 from the target

  sys.agents[0].sensing_range = 5.0;
  opt.sensor_poses = {pose};
  Trajectory in_range = simulate_truth(sys, 5, 1, opt);
  for (int k = 1; k <= 5; ++k) CHECK(in_range.measurement(0, k).has_value());

  sys.agents[0].sensing_range = 4.99;
  Trajectory out_of_range = simulate_truth(sys, 5, 1, opt);
  for (int k = 1; k <= 5; ++k) CHECK(!out_of_range.measurement(0, k).has_value());
}

TEST_CASE("mobile runs log poses and per-step topologies") {
  LtiSystem sys;
  sys.F = system::turning_rate_F(-std::numbers::pi / 60.0, 1.0);
  sys.Q_true = Matrix::Zero(4, 4);
  sys.x0 = Vector(4);
  sys.x0 << 10, 2, 100, 2;
  for (int i = 0; i < 2; ++i) {
    AgentModel a;
    a.H = Matrix(2, 4);
    a.H << 1, 0, 0, 0, 0, 0, 1, 0;
    a.R_true = Matrix::Identity(2, 2);
    a.sensing_range = 1000.0;
    sys.agents.push_back(a);
  }
  SimulateOptions opt;
  opt.mobile = true;
  opt.comm_range = 50.0;
  network::SensorPose p0, p1;
  p0.x = 0; p0.y = 0; p0.speed = 0.5;
  p1.x = 40; p1.y = 0; p1.speed = 0.5;
  opt.sensor_poses = {p0, p1};

  Trajectory traj = simulate_truth(sys, 20, 3, opt);
  REQUIRE(traj.topology_log.size() == 20);
  REQUIRE(traj.pose_log.size() == 21);
  // Sensors pursue the target, so poses change between steps.
  CHECK(traj.pose_log.front()[0].x != traj.pose_log.back()[0].x);
  for (const auto& t : traj.topology_log) CHECK(t.agent_count == 2);
}

TEST_CASE("invalid horizon is rejected") {
  LtiSystem sys;
  sys.F = Matrix::Constant(1, 1, 0.5);
  sys.Q_true = Matrix::Constant(1, 1, 1.0);
  sys.x0 = Vector::Zero(1);
  AgentModel a;
  a.H = Matrix::Constant(1, 1, 1.0);
  a.R_true = Matrix::Constant(1, 1, 1.0);
  sys.agents.push_back(a);
  CHECK_THROWS_AS(simulate_truth(sys, 0, 1), ConfigError);
}

TEST_CASE("pose count mismatch is rejected") {
  LtiSystem sys;
  sys.F = Matrix::Identity(4, 4);
  sys.Q_true = Matrix::Zero(4, 4);
  sys.x0 = Vector::Zero(4);
  AgentModel a;
  a.H = Matrix(2, 4);
  a.H << 1, 0, 0, 0, 0, 0, 1, 0;
  a.R_true = Matrix::Zero(2, 2);
  sys.agents.push_back(a);
  sys.agents.push_back(a);
  SimulateOptions opt;
  opt.sensor_poses = {network::SensorPose{}};  // one pose, two agents
  CHECK_THROWS_AS(simulate_truth(sys, 5, 1, opt), ConfigError);
}
