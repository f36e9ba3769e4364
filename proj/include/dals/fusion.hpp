#pragma once

#include <vector>

#include "dals/als.hpp"
#include "dals/filter.hpp"
#include "dals/system.hpp"

namespace dals::fusion {

using als::AlsProblem;
using als::StructureMap;

/// Trace-inverse convex weights: w_i proportional to 1/tr(P_i), normalized.
std::vector<double> bci_weights(const std::vector<double>& traces);

struct FusionResult {
  std::vector<double> weights;
  Vector fused_residual;
  Matrix reported_cov;  // P_F from the covariance intersection rule
};

/// Covariance intersection: P_F = (sum w_j P_j^{-1})^{-1},
/// eps_F = P_F sum w_j P_j^{-1} eps_j.
FusionResult bci_fuse(const std::vector<Matrix>& P, const std::vector<Vector>& eps,
                      const std::vector<double>& w);

/// Just the reported covariance P_F of the CI rule.
Matrix bci_reported_cov(const std::vector<Matrix>& P, const std::vector<double>& w);

/// Exact covariance of the CI linear combination given the joint block
/// cross-covariance: P_F (sum_ij w_i w_j P_i^{-1} J_ij P_j^{-1}) P_F.
Matrix actual_fused_cov(const std::vector<Matrix>& P, const Matrix& joint,
                        const std::vector<double>& w);

/// Covariance of the best linear unbiased combination (sum W_j = I) under the
/// joint cross-covariance: (E^T J^{-1} E)^{-1} with E = [I; ...; I].
Matrix optimal_fused_cov(Eigen::Index block_dim, const Matrix& joint);

/// Vertical stack of per-agent problems with one shared Q parameter block and
/// per-agent R blocks.  Every input must carry the same Q structure and
/// exactly one R structure.
AlsProblem dals_assemble(const std::vector<AlsProblem>& problems);

/// Ridge solve + reconstruction + PSD projection of the stacked problem.
filter::NoiseHypothesis dals_solve(const AlsProblem& stacked);

struct DalsParams {
  double mu = 0.01;
  double nu = 5e-3;
  int tau = 100;
  int lags = 15;
  int burn_in = 50;
  /// Innovations dropped at the start of each contiguous measurement run
  /// (post-gap filter transients in gated scenarios).
  int segment_warmup = 0;
  int max_iterations = 50;
  /// false: literal block-diagonal stack (independent parameter vectors,
  /// Q estimates averaged afterwards).
  bool shared_q = true;
  /// Replace per-agent empirical autocovariances with their neighbor average
  /// and solve the ego agent's problem alone (identical-H networks).
  bool average_b = false;
  /// Use analytic autocovariances of the true noise instead of empirical
  /// ones (fixed-point diagnostics).
  bool analytic_b = false;
};

struct IterationRecord {
  int iteration = 0;
  Matrix Q;
  double gap = 0.0;
  double fused_trace = 0.0;
  std::vector<double> local_traces;
  double residual_norm = 0.0;
  bool recovered = false;  // hypothesis was inadmissible and got reprojected
};

struct DalsResult {
  filter::NoiseHypothesis hypothesis;  // shared Q; R per participant
  std::vector<IterationRecord> trace;
  bool converged = false;
  bool warning = false;  // iteration cap hit; best iterate returned
  int iterations = 0;
};

/// Iterative distributed ALS loop for one ego agent.  participants = N_i ∪ {i} as agent
/// indices into sys/traj, ego first.  Each iteration refilters the trajectory
/// under the current hypothesis, BCI-fuses the residual covariances, then
/// assembles and solves the stacked problem.
DalsResult run_dals(const system::LtiSystem& sys, const system::Trajectory& traj,
                    const std::vector<int>& participants,
                    const filter::NoiseHypothesis& initial, const DalsParams& params,
                    const StructureMap& q_structure,
                    const std::vector<StructureMap>& r_structures);

/// Single-agent iterative ALS: independent implementation of the degenerate
/// one-participant loop, used as the isolated-agent reference.
DalsResult run_single_als(const system::LtiSystem& sys, const system::Trajectory& traj,
                          int agent, const filter::NoiseHypothesis& initial,
                          const DalsParams& params, const StructureMap& q_structure,
                          const StructureMap& r_structure);

}  // namespace dals::fusion
