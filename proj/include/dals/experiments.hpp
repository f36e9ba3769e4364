#pragma once

#include <cstdint>
#include <vector>

#include "dals/report.hpp"
#include "dals/scenario.hpp"

namespace dals::experiments {

/// var(Q̂) grid over the innovation-window and fused-sensor-count axes for the
/// scalar 10-sensor benchmark.
struct Fig1Result {
  std::vector<int> taus;           // default 55,60,...,100
  std::vector<int> sensor_counts;  // 1..10
  Matrix var_qhat;                 // taus.size() x sensor_counts.size()
  int trials = 0;
  std::uint64_t seed = 0;

  report::Table table() const;  // columns: tau,sensors,var_qhat,trials,seed
};

Fig1Result experiment_fig1(std::uint64_t seed, int trials);
Fig1Result experiment_fig1(const harness::Scenario& scenario);

/// Static-network report: steady residual covariance traces, the fusion
/// trace-bound oracles, and Monte Carlo MSE curves for each agent and the
/// fusion.
struct SsnResult {
  std::vector<double> local_traces;   // tr P_i per agent
  std::vector<double> weights;        // BCI weights
  double fused_trace = 0.0;           // tr P_F
  double actual_trace = 0.0;          // tr P̄_F
  double optimal_trace = 0.0;         // tr P_0
  Matrix joint;                       // stacked residual cross-covariance
  std::vector<std::vector<double>> mse_local;  // [agent][step]
  std::vector<double> mse_fused;               // [step]
  int trials = 0;
  std::uint64_t seed = 0;

  report::Table trace_table() const;  // one row: traces + oracle values
  report::Table mse_table() const;    // per-step MSE columns
};

SsnResult experiment_ssn(std::uint64_t seed, int trials);
SsnResult experiment_ssn(const harness::Scenario& scenario);

/// Mobile-network report around one ego sensor (default sensor 7, index 6):
/// connectivity series, per-step fused vs local traces and MSE.
struct MsnResult {
  int ego = 6;
  std::vector<int> snapshot_steps{15, 43};
  // Per-step means across trials; steps run 1..horizon.
  std::vector<double> mean_connectivity;
  std::vector<double> mse_local;
  std::vector<double> mse_fused;
  std::vector<double> tr_local;        // tr P_eps,ego (hypothesis steady value)
  std::vector<double> tr_fused;        // tr P_BCI over the step's neighbor set
  std::vector<double> tr_fused_actual; // tr P̄_BCI (joint oracle)
  std::vector<double> step_weight;     // fraction of trials contributing per step
  int trials = 0;
  std::uint64_t seed = 0;

  /// Mean over steps with >= 1 neighbor (and contributing trials).
  double mean_tr_local_neighbor_steps() const;
  double mean_tr_fused_neighbor_steps() const;
  double mean_mse_local_neighbor_steps() const;
  double mean_mse_fused_neighbor_steps() const;

  report::Table series_table() const;    // step,connectivity,traces,mse
  report::Table snapshot_table() const;  // per-snapshot-step summary rows
};

MsnResult experiment_msn(std::uint64_t seed, int trials);
MsnResult experiment_msn(const harness::Scenario& scenario, int ego = 6);

/// Per-trial D-ALS metrics for a scenario (used by the `dals` subcommand).
struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  Matrix Q_hat;
  double fused_trace = 0.0;
};

std::vector<TrialRecord> run_monte_carlo(const harness::Scenario& scenario, int trials,
                                         std::uint64_t seed, int ego = 0);

report::Table monte_carlo_table(const std::vector<TrialRecord>& records);

}  // namespace dals::experiments
