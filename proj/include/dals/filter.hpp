#pragma once

#include <optional>
#include <vector>

#include "dals/linalg.hpp"

namespace dals::filter {

/// Assumed noise covariances: one shared Q plus one R per agent.
struct NoiseHypothesis {
  Matrix Q;
  std::vector<Matrix> R;
};

/// Steady-state Kalman design for one agent under a noise hypothesis.
struct KalmanDesign {
  Matrix K;       // n_x x n_z
  Matrix P_pred;  // stabilizing fixed point of the Riccati recursion
  Matrix Fbar;    // F - K H F
  Matrix G;       // [I - K H, -K]
};

/// Iterates P <- F (P - P H^T (H P H^T + R)^{-1} H P) F^T + Q from P = Q to
/// its stabilizing fixed point.  Throws NumericalError when the iteration
/// does not converge or the resulting closed loop is unstable.
KalmanDesign steady_kalman_gain(const Matrix& F, const Matrix& H,
                                const Matrix& Q, const Matrix& R);

/// blockdiag(Q, R) for the stacked noise [w; v].
Matrix noise_block_diag(const Matrix& Q, const Matrix& R);

/// Steady residual covariance: solve_discrete_lyapunov(Fbar, G Sigma G^T).
Matrix residual_steady_cov(const Matrix& Fbar, const Matrix& G, const Matrix& Sigma);

/// Steady covariance of the innovation-generating prediction error, the
/// quantity the ALS autocovariance identities are written in: the solution of
/// P = Fbar P Fbar^T + Q + (F K) R (F K)^T.
Matrix prediction_error_steady_cov(const Matrix& F, const Matrix& H,
                                   const Matrix& K, const Matrix& Q, const Matrix& R);

/// Steady-gain filter for one agent.  Missing measurements advance the
/// prediction without logging an innovation; gaps split the innovation log
/// into contiguous segments.
class FilterAgent {
public:
  /// segment_warmup drops the first innovations of every contiguous
  /// measurement run: after a sensing gap the filter re-converges from a
  /// coasted estimate and those transients are not steady-state samples.
  FilterAgent(const Matrix& F, const Matrix& H, const KalmanDesign& design,
              int burn_in = 50, int segment_warmup = 0);

  /// One time step.  Returns the innovation when a measurement was consumed.
  std::optional<Vector> step(const std::optional<Vector>& z);

  const Vector& state() const { return xhat_; }
  void set_state(const Vector& x) { xhat_ = x; initialized_ = true; }

  /// Innovation log split at measurement gaps; burn-in steps are excluded.
  const std::vector<std::vector<Vector>>& innovation_segments() const { return segments_; }

  /// All logged innovations concatenated (ignores gap boundaries).
  std::vector<Vector> innovations() const;

  const KalmanDesign& design() const { return design_; }

private:
  Matrix F_, H_;
  KalmanDesign design_;
  Vector xhat_;
  bool initialized_ = false;
  int burn_in_;
  int segment_warmup_;
  int measured_steps_ = 0;
  int run_count_ = 0;  // innovations in the current contiguous run
  std::vector<std::vector<Vector>> segments_;
  bool in_segment_ = false;
};

/// Stacked steady cross-covariance of all agents' residuals.  The agents
/// share the process noise w but have independent measurement noises, so the
/// block Lyapunov equation for diag(Fbar_1..Fbar_M) couples through the w
/// column of each G_i.  Returns the (sum n_x) x (sum n_x) block matrix; the
/// diagonal blocks equal residual_steady_cov per agent.
Matrix joint_residual_cross_cov(const std::vector<KalmanDesign>& designs,
                                const Matrix& Q, const std::vector<Matrix>& R);

}  // namespace dals::filter
