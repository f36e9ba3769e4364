#include "dals/als.hpp"

namespace dals::als {

using linalg::kron;
using linalg::vec;

Vector AutoCovStack::stacked() const {
  if (lags.empty()) return Vector();
  const Eigen::Index nz = lags.front().rows();
  Matrix stack(static_cast<Eigen::Index>(lags.size()) * nz, nz);
  for (size_t l = 0; l < lags.size(); ++l)
    stack.middleRows(static_cast<Eigen::Index>(l) * nz, nz) = lags[l];
  return vec(stack);
}

AutoCovStack empirical_autocov(const std::vector<Vector>& e, int N) {
  return empirical_autocov_segments({e}, N);
}

AutoCovStack empirical_autocov_segments(const std::vector<std::vector<Vector>>& segments, int N) {
  if (N < 1) throw ConfigError("empirical_autocov: N must be >= 1");
  int tau = 0;
  Eigen::Index nz = 0;
  for (const auto& seg : segments) {
    tau += static_cast<int>(seg.size());
    if (!seg.empty()) nz = seg.front().size();
  }
  if (tau <= N)
    throw ConfigError("empirical_autocov: innovation window too short (tau <= N)");

  AutoCovStack out;
  out.tau = tau;
  out.lags.reserve(static_cast<size_t>(N));
  for (int l = 0; l < N; ++l) {
    Matrix sum = Matrix::Zero(nz, nz);
    long pairs = 0;
    for (const auto& seg : segments) {
      const long len = static_cast<long>(seg.size());
      for (long k = 0; k + l < len; ++k) {
        sum += seg[static_cast<size_t>(k + l)] * seg[static_cast<size_t>(k)].transpose();
        ++pairs;
      }
    }
    if (pairs == 0)
      throw ConfigError("empirical_autocov: no valid pairs at lag " + std::to_string(l));
    Matrix c = sum / static_cast<double>(pairs);
    if (l == 0) c = 0.5 * (c + c.transpose());
    out.lags.push_back(std::move(c));
  }
  return out;
}

AutoCovStack average_autocov(const std::vector<AutoCovStack>& stacks) {
  if (stacks.empty()) throw ConfigError("average_autocov: empty input");
  AutoCovStack out = stacks.front();
  for (size_t s = 1; s < stacks.size(); ++s) {
    const auto& st = stacks[s];
    if (st.lag_count() != out.lag_count())
      throw ConfigError("average_autocov: mismatched lag counts");
    for (size_t l = 0; l < out.lags.size(); ++l) out.lags[l] += st.lags[l];
    out.tau += st.tau;
  }
  const double inv = 1.0 / static_cast<double>(stacks.size());
  for (auto& c : out.lags) c *= inv;
  return out;
}

Matrix build_als_matrix(const Matrix& F, const Matrix& H, const Matrix& K, int N,
                        const StructureMap& q_structure, const StructureMap& r_structure) {
  if (N < 1) throw ConfigError("build_als_matrix: N must be >= 1");
  const Eigen::Index nx = F.rows();
  const Eigen::Index nz = H.rows();
  const Matrix fbar = F - K * H * F;
  if (linalg::spectral_radius(fbar) >= 1.0 - 1e-9)
    throw NumericalError("build_als_matrix: closed loop F - KHF is not stable");

  // O = [H; H Fbar; ...; H Fbar^{N-1}], Gamma = [I; -H F K; ...; -H Fbar^{N-2} F K]
  Matrix obs(N * nz, nx);
  Matrix gamma(N * nz, nz);
  const Matrix fk = F * K;
  Matrix power = Matrix::Identity(nx, nx);  // Fbar^l
  gamma.topRows(nz) = Matrix::Identity(nz, nz);
  for (int l = 0; l < N; ++l) {
    obs.middleRows(l * nz, nz) = H * power;
    if (l + 1 < N) gamma.middleRows((l + 1) * nz, nz) = -(H * power * fk);
    power = power * fbar;
  }

  const Matrix lyap_lhs = Matrix::Identity(nx * nx, nx * nx) - kron(fbar, fbar);
  const Matrix d = kron(H, obs) * lyap_lhs.partialPivLu().inverse();

  const Matrix sq = q_structure.columns();
  const Matrix sr = r_structure.columns();
  Matrix a(N * nz * nz, sq.cols() + sr.cols());
  a.leftCols(sq.cols()) = d * sq;
  a.rightCols(sr.cols()) =
      (d * kron(fk, fk) + kron(Matrix::Identity(nz, nz), gamma)) * sr;
  return a;
}

std::vector<Matrix> analytic_autocov(const Matrix& F, const Matrix& H, const Matrix& K,
                                     const Matrix& Q, const Matrix& R, int N) {
  const Matrix fbar = F - K * H * F;
  const Matrix fk = F * K;
  const Matrix p = filter::prediction_error_steady_cov(F, H, K, Q, R);
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(N));
  out.push_back(H * p * H.transpose() + R);
  Matrix power = Matrix::Identity(F.rows(), F.cols());  // Fbar^{l-1}
  for (int l = 1; l < N; ++l) {
    out.push_back(H * power * (fbar * p * H.transpose() - fk * R));
    power = power * fbar;
  }
  return out;
}

filter::NoiseHypothesis solve_als(const AlsProblem& p) {
  const Vector theta = linalg::ridge_lsq(p.A, p.b, p.mu);
  filter::NoiseHypothesis hyp;
  Eigen::Index offset = p.q_structure.param_count();
  hyp.Q = linalg::psd_project(p.q_structure.reconstruct(theta.head(offset)));
  for (const auto& rs : p.r_structures) {
    hyp.R.push_back(linalg::psd_project(rs.reconstruct(theta.segment(offset, rs.param_count()))));
    offset += rs.param_count();
  }
  return hyp;
}

Vector pack_parameters(const AlsProblem& p, const Matrix& Q, const std::vector<Matrix>& R) {
  if (R.size() != p.r_structures.size())
    throw ConfigError("pack_parameters: R count mismatch");
  Eigen::Index total = p.q_structure.param_count();
  for (const auto& rs : p.r_structures) total += rs.param_count();
  Vector theta(total);
  theta.head(p.q_structure.param_count()) = p.q_structure.extract(Q);
  Eigen::Index offset = p.q_structure.param_count();
  for (size_t i = 0; i < R.size(); ++i) {
    const auto& rs = p.r_structures[i];
    theta.segment(offset, rs.param_count()) = rs.extract(R[i]);
    offset += rs.param_count();
  }
  return theta;
}

}  // namespace dals::als
