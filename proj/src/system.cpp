#include "dals/system.hpp"

#include <cmath>

namespace dals::system {

void LtiSystem::validate() const {
  const Eigen::Index nx = F.rows();
  if (F.cols() != nx || nx == 0) throw ConfigError("LtiSystem: F must be square");
  if (Q_true.rows() != nx || Q_true.cols() != nx)
    throw ConfigError("LtiSystem: Q dimension mismatch");
  if (x0.size() != nx) throw ConfigError("LtiSystem: x0 dimension mismatch");
  rng::covariance_factor(Q_true);  // rejects non-PSD Q
  for (const auto& a : agents) {
    if (a.H.cols() != nx) throw ConfigError("LtiSystem: H column count mismatch");
    if (a.R_true.rows() != a.H.rows() || a.R_true.cols() != a.H.rows())
      throw ConfigError("LtiSystem: R dimension mismatch");
    rng::covariance_factor(a.R_true);
  }
}

Matrix turning_rate_F(double eta, double Ts) {
  if (Ts <= 0.0) throw ConfigError("turning_rate_F: Ts must be positive");
  double s, c1;  // sin(eta Ts)/eta and (1 - cos(eta Ts))/eta
  if (std::abs(eta) < 1e-8) {
    s = Ts;
    c1 = 0.0;
  } else {
    s = std::sin(eta * Ts) / eta;
    c1 = (1.0 - std::cos(eta * Ts)) / eta;
  }
  const double cs = std::cos(eta * Ts);
  const double sn = std::sin(eta * Ts);
  Matrix f(4, 4);
  f << 1.0, s, 0.0, -c1,
       0.0, cs, 0.0, -sn,
       0.0, c1, 1.0, s,
       0.0, sn, 0.0, cs;
  return f;
}

Trajectory simulate_truth(const LtiSystem& sys, int T, std::uint64_t seed,
                          const SimulateOptions& opt) {
  if (T < 1) throw ConfigError("simulate_truth: T must be >= 1");
  sys.validate();
  const int m = static_cast<int>(sys.agents.size());
  const bool posed = !opt.sensor_poses.empty();
  if (posed && static_cast<int>(opt.sensor_poses.size()) != m)
    throw ConfigError("simulate_truth: pose count must match agent count");

  const Matrix lw = rng::covariance_factor(sys.Q_true);
  std::vector<Matrix> lv;
  lv.reserve(static_cast<size_t>(m));
  for (const auto& a : sys.agents) lv.push_back(rng::covariance_factor(a.R_true));

  Trajectory traj;
  traj.states.reserve(static_cast<size_t>(T) + 1);
  traj.states.push_back(sys.x0);
  traj.meas.assign(static_cast<size_t>(m), {});
  for (auto& row : traj.meas) row.reserve(static_cast<size_t>(T));

  std::vector<network::SensorPose> poses = opt.sensor_poses;
  if (posed) traj.pose_log.push_back(poses);

  // Process noise uses the agent slot m (one past the last agent).
  for (int k = 1; k <= T; ++k) {
    rng::GaussianStream wstream(rng::derive(seed, static_cast<std::uint64_t>(m),
                                            static_cast<std::uint64_t>(k)));
    Vector x = sys.F * traj.states.back() + wstream.next_vector(lw);
    traj.states.push_back(x);

    for (int i = 0; i < m; ++i) {
      const auto& agent = sys.agents[static_cast<size_t>(i)];
      bool in_range = true;
      if (posed && std::isfinite(agent.sensing_range)) {
        const double dx = x(opt.pos_x_index) - poses[static_cast<size_t>(i)].x;
        const double dy = x(opt.pos_y_index) - poses[static_cast<size_t>(i)].y;
        in_range = std::hypot(dx, dy) <= agent.sensing_range;
      }
      if (!in_range) {
        traj.meas[static_cast<size_t>(i)].push_back(std::nullopt);
        continue;
      }
      rng::GaussianStream vstream(rng::derive(seed, static_cast<std::uint64_t>(i),
                                              static_cast<std::uint64_t>(k)));
      Vector z = agent.H * x + vstream.next_vector(lv[static_cast<size_t>(i)]);
      traj.meas[static_cast<size_t>(i)].push_back(z);
    }

    if (posed && opt.mobile) {
      for (int i = 0; i < m; ++i) {
        const auto& z = traj.meas[static_cast<size_t>(i)].back();
        if (!z.has_value()) continue;  // no fix, hold position
        // The position measurement doubles as the pursuit fix.
        Eigen::Vector2d fix((*z)(0), z->size() > 1 ? (*z)(1) : poses[static_cast<size_t>(i)].y);
        poses[static_cast<size_t>(i)] =
            network::step_sensor(poses[static_cast<size_t>(i)], fix, opt.Ts);
      }
      traj.pose_log.push_back(poses);
      if (opt.comm_range > 0.0) {
        std::vector<Eigen::Vector2d> pts;
        pts.reserve(static_cast<size_t>(m));
        for (const auto& p : poses) pts.emplace_back(p.x, p.y);
        traj.topology_log.push_back(network::build_adjacency(pts, opt.comm_range));
      }
    }
  }
  return traj;
}

}  // namespace dals::system
