#include "dals/fusion.hpp"

#include <cmath>
#include <limits>

namespace dals::fusion {

std::vector<double> bci_weights(const std::vector<double>& traces) {
  if (traces.empty()) throw ConfigError("bci_weights: empty input");
  double inv_sum = 0.0;
  for (double t : traces) {
    if (!(t > 0.0)) throw NumericalError("bci_weights: non-positive covariance trace");
    inv_sum += 1.0 / t;
  }
  std::vector<double> w;
  w.reserve(traces.size());
  for (double t : traces) w.push_back((1.0 / t) / inv_sum);
  return w;
}

namespace {

Matrix ci_reported_cov(const std::vector<Matrix>& P, const std::vector<double>& w) {
  const Eigen::Index n = P.front().rows();
  Matrix info = Matrix::Zero(n, n);
  for (size_t j = 0; j < P.size(); ++j) {
    Eigen::LDLT<Matrix> ldlt(P[j]);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0)
      throw NumericalError("bci_fuse: singular participant covariance");
    info += w[j] * ldlt.solve(Matrix::Identity(n, n));
  }
  Matrix pf = info.ldlt().solve(Matrix::Identity(n, n));
  return 0.5 * (pf + pf.transpose());
}

}  // namespace

Matrix bci_reported_cov(const std::vector<Matrix>& P, const std::vector<double>& w) {
  if (P.empty() || P.size() != w.size())
    throw ConfigError("bci_reported_cov: inconsistent input sizes");
  return ci_reported_cov(P, w);
}

FusionResult bci_fuse(const std::vector<Matrix>& P, const std::vector<Vector>& eps,
                      const std::vector<double>& w) {
  if (P.empty() || P.size() != eps.size() || P.size() != w.size())
    throw ConfigError("bci_fuse: inconsistent input sizes");
  FusionResult out;
  out.weights = w;
  out.reported_cov = ci_reported_cov(P, w);
  const Eigen::Index n = P.front().rows();
  Vector acc = Vector::Zero(n);
  for (size_t j = 0; j < P.size(); ++j)
    acc += w[j] * P[j].ldlt().solve(eps[j]);
  out.fused_residual = out.reported_cov * acc;
  return out;
}

Matrix actual_fused_cov(const std::vector<Matrix>& P, const Matrix& joint,
                        const std::vector<double>& w) {
  const size_t m = P.size();
  if (m == 0 || w.size() != m) throw ConfigError("actual_fused_cov: inconsistent input sizes");
  const Eigen::Index n = P.front().rows();
  if (joint.rows() != static_cast<Eigen::Index>(m) * n || joint.cols() != joint.rows())
    throw ConfigError("actual_fused_cov: joint covariance dimension mismatch");
  const Matrix pf = ci_reported_cov(P, w);
  Matrix inner = Matrix::Zero(n, n);
  std::vector<Matrix> pinv(m);
  for (size_t j = 0; j < m; ++j)
    pinv[j] = P[j].ldlt().solve(Matrix::Identity(n, n));
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < m; ++j)
      inner += w[i] * w[j] * pinv[i] *
               joint.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) *
               pinv[j];
  Matrix out = pf * inner * pf;
  return 0.5 * (out + out.transpose());
}

Matrix optimal_fused_cov(Eigen::Index block_dim, const Matrix& joint) {
  if (block_dim <= 0 || joint.rows() % block_dim != 0 || joint.rows() != joint.cols())
    throw ConfigError("optimal_fused_cov: bad dimensions");
  const Eigen::Index m = joint.rows() / block_dim;
  Matrix e = Matrix::Zero(joint.rows(), block_dim);
  for (Eigen::Index i = 0; i < m; ++i)
    e.middleRows(i * block_dim, block_dim) = Matrix::Identity(block_dim, block_dim);
  // Perfectly correlated error components (shared process noise seen through
  // identical measurement maps) make the joint covariance PSD-singular; the
  // BLUE combination is still well defined through the pseudo-inverse.
  Eigen::SelfAdjointEigenSolver<Matrix> es(joint);
  if (es.info() != Eigen::Success)
    throw NumericalError("optimal_fused_cov: joint covariance eigendecomposition failed");
  const double top = es.eigenvalues().maxCoeff();
  if (top <= 0.0 || es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, top))
    throw NumericalError("optimal_fused_cov: joint covariance not positive semidefinite");
  const double cutoff = 1e-12 * top;
  Vector inv = Vector::Zero(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    if (es.eigenvalues()(i) > cutoff) inv(i) = 1.0 / es.eigenvalues()(i);
  const Matrix jpinv =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  Matrix fisher = e.transpose() * jpinv * e;
  Eigen::LDLT<Matrix> fldlt(fisher);
  if (fldlt.info() != Eigen::Success || !fldlt.isPositive() ||
      fldlt.vectorD().minCoeff() <= 0.0)
    throw NumericalError("optimal_fused_cov: fused information matrix is singular");
  Matrix p0 = fldlt.solve(Matrix::Identity(block_dim, block_dim));
  return 0.5 * (p0 + p0.transpose());
}

AlsProblem dals_assemble(const std::vector<AlsProblem>& problems) {
  if (problems.empty()) throw ConfigError("dals_assemble: no problems");
  const auto& first = problems.front();
  const Eigen::Index pq = first.q_structure.param_count();
  Eigen::Index rows = 0, r_cols = 0;
  for (const auto& p : problems) {
    if (p.r_structures.size() != 1)
      throw ConfigError("dals_assemble: inputs must be single-agent problems");
    if (p.q_structure.param_count() != pq || p.q_structure.dim() != first.q_structure.dim())
      throw ConfigError("dals_assemble: mismatched Q structure across agents");
    rows += p.A.rows();
    r_cols += p.r_structures.front().param_count();
  }

  AlsProblem out;
  out.mu = first.mu;
  out.q_structure = first.q_structure;
  out.A = Matrix::Zero(rows, pq + r_cols);
  out.b = Vector(rows);
  Eigen::Index row = 0, col = pq;
  for (const auto& p : problems) {
    const Eigen::Index pr = p.r_structures.front().param_count();
    out.A.block(row, 0, p.A.rows(), pq) = p.A.leftCols(pq);
    out.A.block(row, col, p.A.rows(), pr) = p.A.rightCols(pr);
    out.b.segment(row, p.A.rows()) = p.b;
    out.r_structures.push_back(p.r_structures.front());
    row += p.A.rows();
    col += pr;
  }
  return out;
}

filter::NoiseHypothesis dals_solve(const AlsProblem& stacked) {
  return als::solve_als(stacked);
}

namespace {

constexpr double kInflation = 1e-6;

struct IterationOutput {
  filter::NoiseHypothesis next;
  IterationRecord record;
};

filter::NoiseHypothesis sanitize(const filter::NoiseHypothesis& hyp) {
  filter::NoiseHypothesis out;
  out.Q = linalg::psd_project(hyp.Q) +
          kInflation * Matrix::Identity(hyp.Q.rows(), hyp.Q.cols());
  for (const auto& r : hyp.R)
    out.R.push_back(linalg::psd_project(r) +
                    kInflation * Matrix::Identity(r.rows(), r.cols()));
  return out;
}

/// Filters every participant over the trajectory window and returns designs,
/// residual covariances and innovation segments.
struct FilterPass {
  std::vector<filter::KalmanDesign> designs;
  std::vector<Matrix> residual_covs;
  std::vector<std::vector<std::vector<Vector>>> segments;  // [participant][segment][k]
};

FilterPass filter_participants(const system::LtiSystem& sys, const system::Trajectory& traj,
                               const std::vector<int>& participants,
                               const filter::NoiseHypothesis& hyp, const DalsParams& params) {
  FilterPass pass;
  const int steps = std::min(traj.steps(), params.burn_in + params.tau);
  for (size_t idx = 0; idx < participants.size(); ++idx) {
    const int j = participants[idx];
    const auto& agent = sys.agents[static_cast<size_t>(j)];
    auto design = filter::steady_kalman_gain(sys.F, agent.H, hyp.Q, hyp.R[idx]);
    filter::FilterAgent fa(sys.F, agent.H, design, params.burn_in, params.segment_warmup);
    for (int k = 1; k <= steps; ++k) fa.step(traj.measurement(j, k));
    pass.residual_covs.push_back(filter::residual_steady_cov(
        design.Fbar, design.G, filter::noise_block_diag(hyp.Q, hyp.R[idx])));
    pass.segments.push_back(fa.innovation_segments());
    pass.designs.push_back(std::move(design));
  }
  return pass;
}

IterationOutput dals_iteration(const system::LtiSystem& sys, const system::Trajectory& traj,
                               const std::vector<int>& participants,
                               const filter::NoiseHypothesis& hyp, const DalsParams& params,
                               const StructureMap& qs, const std::vector<StructureMap>& rss) {
  IterationOutput out;
  FilterPass pass = filter_participants(sys, traj, participants, hyp, params);

  std::vector<double> traces;
  for (const auto& p : pass.residual_covs) traces.push_back(p.trace());
  out.record.local_traces = traces;
  const auto w = bci_weights(traces);
  out.record.fused_trace = ci_reported_cov(pass.residual_covs, w).trace();

  // Per-agent problems under the current gains.
  std::vector<AlsProblem> problems;
  std::vector<als::AutoCovStack> stacks;
  for (size_t idx = 0; idx < participants.size(); ++idx) {
    const int j = participants[idx];
    const auto& agent = sys.agents[static_cast<size_t>(j)];
    AlsProblem p;
    p.mu = params.mu;
    p.q_structure = qs;
    p.r_structures = {rss[idx]};
    p.A = als::build_als_matrix(sys.F, agent.H, pass.designs[idx].K, params.lags, qs, rss[idx]);
    if (params.analytic_b) {
      als::AutoCovStack st;
      st.lags = als::analytic_autocov(sys.F, agent.H, pass.designs[idx].K, sys.Q_true,
                                      agent.R_true, params.lags);
      st.tau = params.tau;
      stacks.push_back(std::move(st));
    } else {
      stacks.push_back(als::empirical_autocov_segments(pass.segments[idx], params.lags));
    }
    p.b = stacks.back().stacked();
    problems.push_back(std::move(p));
  }

  filter::NoiseHypothesis next;
  double residual_norm = 0.0;
  if (params.average_b) {
    // Statistics-level fusion: the ego agent solves its own problem against
    // the neighbor-averaged autocovariances.
    const auto avg = als::average_autocov(stacks);
    AlsProblem ego = problems.front();
    ego.b = avg.stacked();
    next = als::solve_als(ego);
    residual_norm = (ego.A * als::pack_parameters(ego, next.Q, next.R) - ego.b).norm();
    next.R.resize(participants.size());
    for (size_t idx = 1; idx < participants.size(); ++idx) next.R[idx] = hyp.R[idx];
  } else if (params.shared_q) {
    const AlsProblem stacked = dals_assemble(problems);
    next = dals_solve(stacked);
    residual_norm =
        (stacked.A * als::pack_parameters(stacked, next.Q, next.R) - stacked.b).norm();
  } else {
    // Literal block-diagonal variant: independent solves, Q averaged.
    Matrix q_acc = Matrix::Zero(hyp.Q.rows(), hyp.Q.cols());
    for (auto& p : problems) {
      auto local = als::solve_als(p);
      q_acc += local.Q;
      next.R.push_back(local.R.front());
      residual_norm += (p.A * als::pack_parameters(p, local.Q, local.R) - p.b).squaredNorm();
    }
    next.Q = q_acc / static_cast<double>(problems.size());
    residual_norm = std::sqrt(residual_norm);
  }

  out.record.residual_norm = residual_norm;
  out.record.gap = (next.Q - hyp.Q).cwiseAbs().maxCoeff();
  out.record.Q = next.Q;
  out.next = std::move(next);
  return out;
}

DalsResult run_loop(const system::LtiSystem& sys, const system::Trajectory& traj,
                    const std::vector<int>& participants,
                    const filter::NoiseHypothesis& initial, const DalsParams& params,
                    const StructureMap& qs, const std::vector<StructureMap>& rss) {
  if (participants.empty()) throw ConfigError("run_dals: no participants");
  if (initial.R.size() != participants.size() || rss.size() != participants.size())
    throw ConfigError("run_dals: hypothesis/structure count must match participants");
  if (traj.steps() <= params.burn_in + params.lags)
    throw ConfigError("run_dals: trajectory shorter than burn-in + lag window");

  DalsResult result;
  filter::NoiseHypothesis hyp = initial;
  double best_norm = std::numeric_limits<double>::infinity();
  filter::NoiseHypothesis best = initial;

  for (int it = 1; it <= params.max_iterations; ++it) {
    IterationOutput step;
    bool recovered = false;
    try {
      step = dals_iteration(sys, traj, participants, hyp, params, qs, rss);
    } catch (const NumericalError&) {
      hyp = sanitize(hyp);
      recovered = true;
      step = dals_iteration(sys, traj, participants, hyp, params, qs, rss);
    }
    step.record.iteration = it;
    step.record.recovered = recovered;
    result.trace.push_back(step.record);
    result.iterations = it;
    hyp = step.next;
    if (step.record.residual_norm < best_norm) {
      best_norm = step.record.residual_norm;
      best = hyp;
    }
    if (step.record.gap <= params.nu) {
      result.converged = true;
      break;
    }
  }
  if (result.converged) {
    result.hypothesis = hyp;
  } else {
    result.warning = true;
    result.hypothesis = best;
  }
  return result;
}

}  // namespace

DalsResult run_dals(const system::LtiSystem& sys, const system::Trajectory& traj,
                    const std::vector<int>& participants,
                    const filter::NoiseHypothesis& initial, const DalsParams& params,
                    const StructureMap& q_structure,
                    const std::vector<StructureMap>& r_structures) {
  return run_loop(sys, traj, participants, initial, params, q_structure, r_structures);
}

DalsResult run_single_als(const system::LtiSystem& sys, const system::Trajectory& traj,
                          int agent, const filter::NoiseHypothesis& initial,
                          const DalsParams& params, const StructureMap& q_structure,
                          const StructureMap& r_structure) {
  DalsParams p = params;
  p.shared_q = true;
  p.average_b = false;
  return run_loop(sys, traj, {agent}, initial, p, q_structure, {r_structure});
}

}  // namespace dals::fusion
