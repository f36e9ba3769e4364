#pragma once

#include <vector>

#include "dals/filter.hpp"
#include "dals/linalg.hpp"

namespace dals::als {

using linalg::StructureMap;

/// Empirical innovation autocovariances for lags 0..N-1.
struct AutoCovStack {
  std::vector<Matrix> lags;  // N matrices, n_z x n_z; lag 0 symmetrized
  int tau = 0;               // innovation count behind the estimate

  int lag_count() const { return static_cast<int>(lags.size()); }

  /// vec of the vertical stack [C_0; C_1; ...; C_{N-1}].
  Vector stacked() const;
};

/// C_l = (1/(tau-l)) sum_{k=1..tau-l} e_{k+l} e_k^T.  Throws when tau <= N.
AutoCovStack empirical_autocov(const std::vector<Vector>& e, int N);

/// Same estimator over gap-separated contiguous segments: pairs never span a
/// gap, denominators count the valid pairs across all segments.
AutoCovStack empirical_autocov_segments(const std::vector<std::vector<Vector>>& segments, int N);

/// Elementwise average of per-agent autocovariance stacks (neighbor fusion of
/// the empirical statistics; requires identical measurement dimensions).
AutoCovStack average_autocov(const std::vector<AutoCovStack>& stacks);

/// Per-agent ALS problem, or the stacked multi-agent problem after assembly.
/// Column layout: [shared Q parameters | R parameters, agent by agent].
struct AlsProblem {
  Matrix A;
  Vector b;
  double mu = 0.0;
  StructureMap q_structure = StructureMap::scalar();
  std::vector<StructureMap> r_structures;  // one per participating agent
};

/// Coefficient matrix mapping [Q params; R params] to the stacked analytic
/// autocovariances:
///   A = [D S_q,  (D (FK ⊗ FK) + I ⊗ Gamma) S_r]
///   D = (H ⊗ O)(I - Fbar ⊗ Fbar)^{-1},  O = [H; H Fbar; ...; H Fbar^{N-1}],
///   Gamma = [I; -H F K; -H Fbar F K; ...; -H Fbar^{N-2} F K]
/// with Fbar = F - K H F and S_q, S_r the structure-map column compressions.
/// Throws on an unstable Fbar.
Matrix build_als_matrix(const Matrix& F, const Matrix& H, const Matrix& K, int N,
                        const StructureMap& q_structure, const StructureMap& r_structure);

/// Analytic innovation autocovariance stack [C_0; ...; C_{N-1}] under
/// (Q, R): C_0 = H P H^T + R, C_l = H Fbar^l P H^T - H Fbar^{l-1} F K R with
/// P = prediction_error_steady_cov.  Test oracle for build_als_matrix.
std::vector<Matrix> analytic_autocov(const Matrix& F, const Matrix& H, const Matrix& K,
                                     const Matrix& Q, const Matrix& R, int N);

/// Ridge solve + structure reconstruction + PSD projection of each block.
filter::NoiseHypothesis solve_als(const AlsProblem& p);

/// Parameter vector [theta_Q; theta_R1; ...] matching an AlsProblem's columns.
Vector pack_parameters(const AlsProblem& p, const Matrix& Q, const std::vector<Matrix>& R);

}  // namespace dals::als
