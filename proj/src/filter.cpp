#include "dals/filter.hpp"

#include <cmath>

namespace dals::filter {

namespace {
constexpr double kRiccatiTol = 1e-12;
constexpr int kRiccatiCap = 100000;
}  // namespace

KalmanDesign steady_kalman_gain(const Matrix& F, const Matrix& H,
                                const Matrix& Q, const Matrix& R) {
  const Eigen::Index nx = F.rows();
  if (F.cols() != nx || H.cols() != nx) throw ConfigError("steady_kalman_gain: dimension mismatch");
  const Eigen::Index nz = H.rows();
  if (Q.rows() != nx || Q.cols() != nx || R.rows() != nz || R.cols() != nz)
    throw ConfigError("steady_kalman_gain: covariance dimension mismatch");

  Matrix p = 0.5 * (Q + Q.transpose());
  bool converged = false;
  for (int it = 0; it < kRiccatiCap; ++it) {
    Matrix s = H * p * H.transpose() + R;
    Eigen::LDLT<Matrix> ldlt(s);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericalError("steady_kalman_gain: innovation covariance not positive definite");
    Matrix kt = ldlt.solve(H * p);  // (H P H^T + R)^{-1} H P
    Matrix next = F * (p - p * H.transpose() * kt) * F.transpose() + Q;
    next = 0.5 * (next + next.transpose());
    const double delta = (next - p).cwiseAbs().maxCoeff();
    p = next;
    if (delta < kRiccatiTol) {
      converged = true;
      break;
    }
    if (!p.allFinite()) throw NumericalError("steady_kalman_gain: Riccati iteration diverged");
  }
  if (!converged)
    throw NumericalError("steady_kalman_gain: Riccati iteration did not converge within cap");

  Matrix s = H * p * H.transpose() + R;
  Eigen::LDLT<Matrix> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("steady_kalman_gain: innovation covariance not positive definite");
  KalmanDesign d;
  d.P_pred = p;
  d.K = ldlt.solve(H * p.transpose()).transpose();  // P H^T S^{-1}
  d.Fbar = F - d.K * H * F;
  d.G = Matrix(nx, nx + nz);
  d.G << Matrix::Identity(nx, nx) - d.K * H, -d.K;
  if (linalg::spectral_radius(d.Fbar) >= 1.0 - 1e-9)
    throw NumericalError("steady_kalman_gain: closed loop F - KHF is not stable");
  return d;
}

Matrix noise_block_diag(const Matrix& Q, const Matrix& R) {
  Matrix sigma = Matrix::Zero(Q.rows() + R.rows(), Q.cols() + R.cols());
  sigma.topLeftCorner(Q.rows(), Q.cols()) = Q;
  sigma.bottomRightCorner(R.rows(), R.cols()) = R;
  return sigma;
}

Matrix residual_steady_cov(const Matrix& Fbar, const Matrix& G, const Matrix& Sigma) {
  return linalg::solve_discrete_lyapunov(Fbar, G * Sigma * G.transpose());
}

Matrix prediction_error_steady_cov(const Matrix& F, const Matrix& H,
                                   const Matrix& K, const Matrix& Q, const Matrix& R) {
  const Matrix fbar = F - K * H * F;
  const Matrix fk = F * K;
  return linalg::solve_discrete_lyapunov(fbar, Q + fk * R * fk.transpose());
}

FilterAgent::FilterAgent(const Matrix& F, const Matrix& H, const KalmanDesign& design,
                         int burn_in, int segment_warmup)
    : F_(F), H_(H), design_(design), xhat_(Vector::Zero(F.rows())), burn_in_(burn_in),
      segment_warmup_(segment_warmup) {
  // A non-invertible H cannot back-project the first measurement; start at 0.
  if (H_.rows() != H_.cols()) initialized_ = true;
}

std::optional<Vector> FilterAgent::step(const std::optional<Vector>& z) {
  ++measured_steps_;
  if (!initialized_) {
    if (z.has_value()) {
      Eigen::FullPivLU<Matrix> lu(H_);
      if (lu.isInvertible()) xhat_ = lu.solve(*z);
      initialized_ = true;
    }
    in_segment_ = false;
    run_count_ = 0;
    return std::nullopt;
  }
  const Vector xpred = F_ * xhat_;
  if (!z.has_value()) {
    xhat_ = xpred;
    in_segment_ = false;  // gap restarts the correlation window
    run_count_ = 0;
    return std::nullopt;
  }
  Vector e = *z - H_ * xpred;
  xhat_ = xpred + design_.K * e;
  ++run_count_;
  if (measured_steps_ > burn_in_ && run_count_ > segment_warmup_) {
    if (!in_segment_) {
      segments_.emplace_back();
      in_segment_ = true;
    }
    segments_.back().push_back(e);
  }
  return e;
}

std::vector<Vector> FilterAgent::innovations() const {
  std::vector<Vector> out;
  for (const auto& seg : segments_) out.insert(out.end(), seg.begin(), seg.end());
  return out;
}

Matrix joint_residual_cross_cov(const std::vector<KalmanDesign>& designs,
                                const Matrix& Q, const std::vector<Matrix>& R) {
  const int m = static_cast<int>(designs.size());
  if (m == 0) throw ConfigError("joint_residual_cross_cov: no agents");
  if (R.size() != designs.size())
    throw ConfigError("joint_residual_cross_cov: R count mismatch");
  const Eigen::Index nx = designs.front().Fbar.rows();
  Eigen::Index nz_total = 0;
  for (const auto& r : R) nz_total += r.rows();

  Matrix fblk = Matrix::Zero(m * nx, m * nx);
  Matrix gblk = Matrix::Zero(m * nx, nx + nz_total);
  Matrix sigma = Matrix::Zero(nx + nz_total, nx + nz_total);
  sigma.topLeftCorner(nx, nx) = Q;

  Eigen::Index vcol = nx;
  for (int i = 0; i < m; ++i) {
    const auto& d = designs[static_cast<size_t>(i)];
    if (d.Fbar.rows() != nx) throw ConfigError("joint_residual_cross_cov: mixed state dimensions");
    const Eigen::Index nz = R[static_cast<size_t>(i)].rows();
    fblk.block(i * nx, i * nx, nx, nx) = d.Fbar;
    gblk.block(i * nx, 0, nx, nx) = d.G.leftCols(nx);          // shared w channel
    gblk.block(i * nx, vcol, nx, nz) = d.G.rightCols(nz);      // own v channel
    sigma.block(vcol, vcol, nz, nz) = R[static_cast<size_t>(i)];
    vcol += nz;
  }
  return linalg::solve_discrete_lyapunov(fblk, gblk * sigma * gblk.transpose());
}

}  // namespace dals::filter
