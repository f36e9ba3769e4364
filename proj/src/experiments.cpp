#include "dals/experiments.hpp"

#include <algorithm>
#include <cmath>

namespace dals::experiments {

using harness::Scenario;

// ---------------------------------------------------------------------------
// Scalar benchmark: var(Q̂) over the (tau, fused sensor count) grid.
// ---------------------------------------------------------------------------

report::Table Fig1Result::table() const {
  report::Table t;
  t.columns = {"tau", "sensors", "var_qhat", "trials", "seed"};
  for (size_t a = 0; a < taus.size(); ++a)
    for (size_t m = 0; m < sensor_counts.size(); ++m)
      t.add_row({static_cast<double>(taus[a]), static_cast<double>(sensor_counts[m]),
                 var_qhat(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)),
                 static_cast<double>(trials), static_cast<double>(seed)});
  return t;
}

Fig1Result experiment_fig1(std::uint64_t seed, int trials) {
  Scenario s = harness::fig1_scenario();
  s.seed = seed;
  s.trials = trials;
  return experiment_fig1(s);
}

Fig1Result experiment_fig1(const harness::Scenario& scenario) {
  const auto sys = scenario.to_system();
  const int agents = static_cast<int>(sys.agents.size());
  const int max_tau = 100;
  const int N = scenario.lags;

  Fig1Result out;
  for (int tau = 55; tau <= 100; tau += 5) out.taus.push_back(tau);
  for (int m = 1; m <= agents; ++m) out.sensor_counts.push_back(m);
  out.trials = scenario.trials;
  out.seed = scenario.seed;

  // Gains are designed at the true noise values; each agent carries its own
  // problem matrix and the fused estimate is the shared-Q stacked solve over
  // the first m agents.
  std::vector<filter::KalmanDesign> designs;
  std::vector<als::AlsProblem> problems;
  for (int j = 0; j < agents; ++j) {
    const auto& a = sys.agents[static_cast<size_t>(j)];
    designs.push_back(filter::steady_kalman_gain(sys.F, a.H, sys.Q_true, a.R_true));
    als::AlsProblem p;
    p.mu = scenario.mu;
    p.q_structure = scenario.q_structure();
    p.r_structures = {scenario.r_structure(j)};
    p.A = als::build_als_matrix(sys.F, a.H, designs.back().K, N, p.q_structure,
                                p.r_structures.front());
    problems.push_back(std::move(p));
  }

  // q_samples[cell][trial]
  std::vector<std::vector<std::vector<double>>> q_samples(
      out.taus.size(), std::vector<std::vector<double>>(out.sensor_counts.size()));

  for (int t = 0; t < scenario.trials; ++t) {
    const std::uint64_t trial_seed = rng::derive(scenario.seed, static_cast<std::uint64_t>(t));
    // Each sensor contributes an innovation stream from its own independent
    // realization of the plant; fused streams carry independent information.
    std::vector<std::vector<Vector>> innov(static_cast<size_t>(agents));
    for (int j = 0; j < agents; ++j) {
      const auto traj = system::simulate_truth(
          sys, scenario.burn_in + max_tau,
          rng::derive(trial_seed, static_cast<std::uint64_t>(j) + 1));
      filter::FilterAgent fa(sys.F, sys.agents[static_cast<size_t>(j)].H,
                             designs[static_cast<size_t>(j)], scenario.burn_in);
      for (int k = 1; k <= traj.steps(); ++k) fa.step(traj.measurement(j, k));
      innov[static_cast<size_t>(j)] = fa.innovations();
    }

    for (size_t a = 0; a < out.taus.size(); ++a) {
      const int tau = out.taus[a];
      // Identical measurement models: the fused statistic is the neighbor
      // average of the empirical autocovariances, solved under the ego model.
      std::vector<als::AutoCovStack> prefix;
      for (size_t m = 0; m < out.sensor_counts.size(); ++m) {
        std::vector<Vector> window(innov[m].begin(), innov[m].begin() + tau);
        prefix.push_back(als::empirical_autocov(window, N));
        als::AlsProblem cell = problems.front();
        cell.b = als::average_autocov(prefix).stacked();
        q_samples[a][m].push_back(als::solve_als(cell).Q(0, 0));
      }
    }
  }

  out.var_qhat = Matrix(static_cast<Eigen::Index>(out.taus.size()),
                        static_cast<Eigen::Index>(out.sensor_counts.size()));
  for (size_t a = 0; a < out.taus.size(); ++a)
    for (size_t m = 0; m < out.sensor_counts.size(); ++m)
      out.var_qhat(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)) =
          report::sample_variance(q_samples[a][m]);
  return out;
}

// ---------------------------------------------------------------------------
// SSN: steady traces, fusion-bound oracles, MSE curves.
// ---------------------------------------------------------------------------

report::Table SsnResult::trace_table() const {
  report::Table t;
  t.columns = {"tr_p1", "tr_p2", "tr_p3", "tr_pf", "tr_pf_actual", "tr_p0", "trials", "seed"};
  t.add_row({local_traces[0], local_traces[1], local_traces[2], fused_trace, actual_trace,
             optimal_trace, static_cast<double>(trials), static_cast<double>(seed)});
  return t;
}

report::Table SsnResult::mse_table() const {
  report::Table t;
  t.columns = {"step", "mse_1", "mse_2", "mse_3", "mse_fused"};
  for (size_t k = 0; k < mse_fused.size(); ++k)
    t.add_row({static_cast<double>(k + 1), mse_local[0][k], mse_local[1][k], mse_local[2][k],
               mse_fused[k]});
  return t;
}

SsnResult experiment_ssn(std::uint64_t seed, int trials) {
  Scenario s = harness::ssn_scenario();
  s.seed = seed;
  s.trials = trials;
  return experiment_ssn(s);
}

SsnResult experiment_ssn(const harness::Scenario& scenario) {
  const auto sys = scenario.to_system();
  const int m = static_cast<int>(sys.agents.size());
  SsnResult out;
  out.trials = scenario.trials;
  out.seed = scenario.seed;

  std::vector<filter::KalmanDesign> designs;
  std::vector<Matrix> rs;
  std::vector<Matrix> p_local;
  for (const auto& a : sys.agents) {
    auto d = filter::steady_kalman_gain(sys.F, a.H, sys.Q_true, a.R_true);
    p_local.push_back(filter::residual_steady_cov(
        d.Fbar, d.G, filter::noise_block_diag(sys.Q_true, a.R_true)));
    designs.push_back(std::move(d));
    rs.push_back(a.R_true);
  }
  for (const auto& p : p_local) out.local_traces.push_back(p.trace());
  out.weights = fusion::bci_weights(out.local_traces);
  out.joint = filter::joint_residual_cross_cov(designs, sys.Q_true, rs);
  const Matrix pf = fusion::bci_reported_cov(p_local, out.weights);
  out.fused_trace = pf.trace();
  out.actual_trace = fusion::actual_fused_cov(p_local, out.joint, out.weights).trace();
  out.optimal_trace = fusion::optimal_fused_cov(sys.state_dim(), out.joint).trace();

  // Monte Carlo MSE curves under the same steady gains and CI weights.
  const int horizon = scenario.horizon;
  std::vector<std::vector<std::vector<double>>> sq_local(
      static_cast<size_t>(m));  // [agent][trial][step]
  std::vector<std::vector<double>> sq_fused;
  for (int t = 0; t < scenario.trials; ++t) {
    const std::uint64_t trial_seed = rng::derive(scenario.seed, static_cast<std::uint64_t>(t));
    const auto traj = system::simulate_truth(sys, horizon, trial_seed);
    std::vector<filter::FilterAgent> filters;
    for (int j = 0; j < m; ++j)
      filters.emplace_back(sys.F, sys.agents[static_cast<size_t>(j)].H,
                           designs[static_cast<size_t>(j)], 0);
    std::vector<std::vector<double>> local_row(static_cast<size_t>(m));
    std::vector<double> fused_row;
    for (int k = 1; k <= horizon; ++k) {
      std::vector<Vector> eps;
      for (int j = 0; j < m; ++j) {
        filters[static_cast<size_t>(j)].step(traj.measurement(j, k));
        eps.push_back(traj.states[static_cast<size_t>(k)] - filters[static_cast<size_t>(j)].state());
        local_row[static_cast<size_t>(j)].push_back(eps.back().squaredNorm());
      }
      const auto fr = fusion::bci_fuse(p_local, eps, out.weights);
      fused_row.push_back(fr.fused_residual.squaredNorm());
    }
    for (int j = 0; j < m; ++j) sq_local[static_cast<size_t>(j)].push_back(local_row[static_cast<size_t>(j)]);
    sq_fused.push_back(fused_row);
  }
  for (int j = 0; j < m; ++j)
    out.mse_local.push_back(report::mse_series(sq_local[static_cast<size_t>(j)]));
  out.mse_fused = report::mse_series(sq_fused);
  return out;
}

// ---------------------------------------------------------------------------
// MSN: mobile pursuit, per-step fusion around the ego sensor.
// ---------------------------------------------------------------------------

namespace {

/// Steady design under a possibly boundary-marginal hypothesis: retries with
/// the same project-and-inflate recovery the iterative loop uses.
filter::KalmanDesign design_with_recovery(const Matrix& F, const Matrix& H, Matrix& Q,
                                          Matrix& R) {
  double inflation = 1e-6;
  for (int attempt = 0; attempt < 4; ++attempt) {
    try {
      return filter::steady_kalman_gain(F, H, Q, R);
    } catch (const NumericalError&) {
      Q = linalg::psd_project(Q) + inflation * Matrix::Identity(Q.rows(), Q.cols());
      R = linalg::psd_project(R) + inflation * Matrix::Identity(R.rows(), R.cols());
      inflation *= 100.0;
    }
  }
  return filter::steady_kalman_gain(F, H, Q, R);
}

double mean_over_neighbor_steps(const std::vector<double>& series,
                                const std::vector<double>& connectivity,
                                const std::vector<double>& weight) {
  double acc = 0.0;
  int n = 0;
  for (size_t k = 0; k < series.size(); ++k) {
    if (connectivity[k] >= 1.0 && weight[k] > 0.0) {
      acc += series[k];
      ++n;
    }
  }
  return n > 0 ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace

double MsnResult::mean_tr_local_neighbor_steps() const {
  return mean_over_neighbor_steps(tr_local, mean_connectivity, step_weight);
}
double MsnResult::mean_tr_fused_neighbor_steps() const {
  return mean_over_neighbor_steps(tr_fused, mean_connectivity, step_weight);
}
double MsnResult::mean_mse_local_neighbor_steps() const {
  return mean_over_neighbor_steps(mse_local, mean_connectivity, step_weight);
}
double MsnResult::mean_mse_fused_neighbor_steps() const {
  return mean_over_neighbor_steps(mse_fused, mean_connectivity, step_weight);
}

report::Table MsnResult::series_table() const {
  report::Table t;
  t.columns = {"step", "connectivity", "tr_local", "tr_fused", "tr_fused_actual",
               "mse_local", "mse_fused", "coverage"};
  for (size_t k = 0; k < mean_connectivity.size(); ++k)
    t.add_row({static_cast<double>(k + 1), mean_connectivity[k], tr_local[k], tr_fused[k],
               tr_fused_actual[k], mse_local[k], mse_fused[k], step_weight[k]});
  return t;
}

report::Table MsnResult::snapshot_table() const {
  report::Table t;
  t.columns = {"step", "tr_local", "tr_fused", "tr_fused_actual", "mse_local", "mse_fused"};
  for (int k : snapshot_steps) {
    const size_t idx = static_cast<size_t>(k - 1);
    if (idx >= tr_local.size()) continue;
    t.add_row({static_cast<double>(k), tr_local[idx], tr_fused[idx], tr_fused_actual[idx],
               mse_local[idx], mse_fused[idx]});
  }
  return t;
}

MsnResult experiment_msn(std::uint64_t seed, int trials) {
  Scenario s = harness::msn_scenario();
  s.seed = seed;
  s.trials = trials;
  return experiment_msn(s);
}

MsnResult experiment_msn(const harness::Scenario& scenario, int ego) {
  const auto sys = scenario.to_system();
  const int m = static_cast<int>(sys.agents.size());
  const int horizon = scenario.horizon;
  system::SimulateOptions opts;
  opts.sensor_poses = scenario.initial_poses();
  opts.mobile = scenario.mobile;
  opts.Ts = scenario.Ts;
  opts.comm_range = scenario.comm_range;

  MsnResult out;
  out.ego = ego;
  out.trials = scenario.trials;
  out.seed = scenario.seed;

  const size_t steps = static_cast<size_t>(horizon);
  std::vector<double> conn_sum(steps, 0.0), trl_sum(steps, 0.0), trf_sum(steps, 0.0),
      tra_sum(steps, 0.0), msel_sum(steps, 0.0), msef_sum(steps, 0.0);
  std::vector<int> count(steps, 0);

  const auto q_struct = scenario.q_structure();

  for (int t = 0; t < scenario.trials; ++t) {
    const std::uint64_t trial_seed = rng::derive(scenario.seed, static_cast<std::uint64_t>(t));
    const auto traj = system::simulate_truth(sys, horizon, trial_seed, opts);

    // Participants for the estimation window: the ego plus neighbors (at the
    // window end) that gathered enough contiguous innovations.
    const int window_end = std::min(horizon, scenario.burn_in + scenario.tau);
    const auto& topo_end = traj.topology_log[static_cast<size_t>(window_end - 1)];
    const auto estimable = [&](int j) {
      int present = 0, run = 0, longest = 0;
      for (int k = 1; k <= window_end; ++k) {
        if (traj.measurement(j, k).has_value()) {
          ++present;
          if (present > scenario.burn_in) ++run;
        } else {
          run = 0;
        }
        longest = std::max(longest, run);
      }
      return present - scenario.burn_in > 3 * scenario.lags &&
             longest >= scenario.segment_warmup + 2 * scenario.lags;
    };
    std::vector<int> participants;
    if (estimable(ego)) participants.push_back(ego);
    for (int j : network::neighbors(topo_end, ego))
      if (estimable(j)) participants.push_back(j);

    std::vector<linalg::StructureMap> r_structs;
    for (int j : participants) r_structs.push_back(scenario.r_structure(j));
    filter::NoiseHypothesis init =
        scenario.initial_hypothesis(participants.empty() ? std::vector<int>{ego} : participants);

    fusion::DalsResult est;
    est.hypothesis = init;
    if (!participants.empty()) {
      try {
        est = fusion::run_dals(sys, traj, participants, init, scenario.dals_params(), q_struct,
                               r_structs);
      } catch (const std::exception&) {
        est.hypothesis = init;  // keep the initial hypothesis for this trial
      }
    }

    // Final designs and steady residual covariances for every agent.
    filter::NoiseHypothesis full;
    full.Q = est.hypothesis.Q;
    full.R.assign(static_cast<size_t>(m), scenario.R0.empty() ? sys.agents[0].R_true
                                                              : scenario.R0.front());
    for (size_t idx = 0; idx < participants.size(); ++idx)
      full.R[static_cast<size_t>(participants[idx])] = est.hypothesis.R[idx];

    std::vector<filter::KalmanDesign> designs;
    std::vector<Matrix> p_steady;
    std::vector<Matrix> r_used;
    for (int j = 0; j < m; ++j) {
      auto d = design_with_recovery(sys.F, sys.agents[static_cast<size_t>(j)].H, full.Q,
                                    full.R[static_cast<size_t>(j)]);
      Matrix p = filter::residual_steady_cov(
          d.Fbar, d.G, filter::noise_block_diag(full.Q, full.R[static_cast<size_t>(j)]));
      // Degenerate hypotheses can zero out whole directions; a relative jitter
      // keeps the covariance-intersection inverses well conditioned.
      p += 1e-9 * std::max(p.trace(), 1.0) * Matrix::Identity(p.rows(), p.cols());
      p_steady.push_back(std::move(p));
      r_used.push_back(full.R[static_cast<size_t>(j)]);
      designs.push_back(std::move(d));
    }
    const Matrix joint = filter::joint_residual_cross_cov(designs, full.Q, r_used);
    const Eigen::Index nx = sys.state_dim();

    std::vector<filter::FilterAgent> filters;
    for (int j = 0; j < m; ++j)
      filters.emplace_back(sys.F, sys.agents[static_cast<size_t>(j)].H,
                           designs[static_cast<size_t>(j)], 0);

    for (int k = 1; k <= horizon; ++k) {
      for (int j = 0; j < m; ++j) filters[static_cast<size_t>(j)].step(traj.measurement(j, k));
      const auto& topo = traj.topology_log[static_cast<size_t>(k - 1)];
      conn_sum[static_cast<size_t>(k - 1)] += network::connectivity(topo, ego);
      if (!traj.measurement(ego, k).has_value()) continue;

      std::vector<int> fuse_set{ego};
      for (int j : network::neighbors(topo, ego))
        if (traj.measurement(j, k).has_value()) fuse_set.push_back(j);

      std::vector<Matrix> p_set;
      std::vector<Vector> eps_set;
      std::vector<double> traces;
      for (int j : fuse_set) {
        p_set.push_back(p_steady[static_cast<size_t>(j)]);
        eps_set.push_back(traj.states[static_cast<size_t>(k)] -
                          filters[static_cast<size_t>(j)].state());
        traces.push_back(p_set.back().trace());
      }
      const auto w = fusion::bci_weights(traces);
      const auto fused = fusion::bci_fuse(p_set, eps_set, w);

      Matrix sub_joint(static_cast<Eigen::Index>(fuse_set.size()) * nx,
                       static_cast<Eigen::Index>(fuse_set.size()) * nx);
      for (size_t a = 0; a < fuse_set.size(); ++a)
        for (size_t b = 0; b < fuse_set.size(); ++b)
          sub_joint.block(static_cast<Eigen::Index>(a) * nx, static_cast<Eigen::Index>(b) * nx,
                          nx, nx) =
              joint.block(fuse_set[a] * nx, fuse_set[b] * nx, nx, nx);

      const size_t idx = static_cast<size_t>(k - 1);
      trl_sum[idx] += p_steady[static_cast<size_t>(ego)].trace();
      trf_sum[idx] += fused.reported_cov.trace();
      tra_sum[idx] += fusion::actual_fused_cov(p_set, sub_joint, w).trace();
      msel_sum[idx] += eps_set.front().squaredNorm();
      msef_sum[idx] += fused.fused_residual.squaredNorm();
      ++count[idx];
    }
  }

  out.mean_connectivity.resize(steps);
  out.tr_local.resize(steps);
  out.tr_fused.resize(steps);
  out.tr_fused_actual.resize(steps);
  out.mse_local.resize(steps);
  out.mse_fused.resize(steps);
  out.step_weight.resize(steps);
  for (size_t k = 0; k < steps; ++k) {
    out.mean_connectivity[k] = conn_sum[k] / static_cast<double>(scenario.trials);
    out.step_weight[k] = static_cast<double>(count[k]) / static_cast<double>(scenario.trials);
    if (count[k] > 0) {
      const double inv = 1.0 / static_cast<double>(count[k]);
      out.tr_local[k] = trl_sum[k] * inv;
      out.tr_fused[k] = trf_sum[k] * inv;
      out.tr_fused_actual[k] = tra_sum[k] * inv;
      out.mse_local[k] = msel_sum[k] * inv;
      out.mse_fused[k] = msef_sum[k] * inv;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generic per-trial Monte Carlo runner.
// ---------------------------------------------------------------------------

std::vector<TrialRecord> run_monte_carlo(const harness::Scenario& scenario, int trials,
                                         std::uint64_t seed, int ego) {
  if (trials < 1) throw ConfigError("run_monte_carlo: trials must be >= 1");
  const auto sys = scenario.to_system();
  const int m = static_cast<int>(sys.agents.size());
  system::SimulateOptions opts;
  if (scenario.mobile) {
    opts.sensor_poses = scenario.initial_poses();
    opts.mobile = true;
    opts.Ts = scenario.Ts;
    opts.comm_range = scenario.comm_range;
  }

  std::vector<TrialRecord> out;
  const auto q_struct = scenario.q_structure();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = rng::derive(seed, static_cast<std::uint64_t>(t));
    const auto traj = system::simulate_truth(sys, scenario.horizon, trial_seed, opts);

    std::vector<int> participants{ego};
    if (scenario.mobile && !traj.topology_log.empty()) {
      const int window_end = std::min(scenario.horizon, scenario.burn_in + scenario.tau);
      const auto& topo = traj.topology_log[static_cast<size_t>(window_end - 1)];
      const auto estimable = [&](int j) {
        int present = 0, run = 0, longest = 0;
        for (int k = 1; k <= window_end; ++k) {
          if (traj.measurement(j, k).has_value()) {
            ++present;
            if (present > scenario.burn_in) ++run;
          } else {
            run = 0;
          }
          longest = std::max(longest, run);
        }
        return present - scenario.burn_in > 3 * scenario.lags &&
             longest >= scenario.segment_warmup + 2 * scenario.lags;
      };
      for (int j : network::neighbors(topo, ego))
        if (estimable(j)) participants.push_back(j);
    } else {
      for (int j = 0; j < m; ++j)
        if (j != ego) participants.push_back(j);
    }

    std::vector<linalg::StructureMap> r_structs;
    for (int j : participants) r_structs.push_back(scenario.r_structure(j));
    auto params = scenario.dals_params();
    const auto res = fusion::run_dals(sys, traj, participants,
                                      scenario.initial_hypothesis(participants), params,
                                      q_struct, r_structs);
    TrialRecord rec;
    rec.trial = t;
    rec.seed = trial_seed;
    rec.iterations = res.iterations;
    rec.converged = res.converged;
    rec.Q_hat = res.hypothesis.Q;
    rec.fused_trace = res.trace.empty() ? 0.0 : res.trace.back().fused_trace;
    out.push_back(std::move(rec));
  }
  return out;
}

report::Table monte_carlo_table(const std::vector<TrialRecord>& records) {
  report::Table t;
  t.columns = {"trial", "seed", "iterations", "converged", "fused_trace"};
  const Eigen::Index n = records.empty() ? 0 : records.front().Q_hat.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      t.columns.push_back("q_" + std::to_string(i) + std::to_string(j));
  for (const auto& r : records) {
    std::vector<double> row{static_cast<double>(r.trial), static_cast<double>(r.seed),
                            static_cast<double>(r.iterations), r.converged ? 1.0 : 0.0,
                            r.fused_trace};
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) row.push_back(r.Q_hat(i, j));
    t.add_row(row);
  }
  return t;
}

}  // namespace dals::experiments
