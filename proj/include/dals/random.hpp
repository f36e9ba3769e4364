#pragma once

#include <cstdint>

#include "dals/linalg.hpp"

namespace dals::rng {

/// splitmix64 mixing step.
std::uint64_t mix(std::uint64_t x);

/// Derives an independent stream key from a parent seed and a label chain,
/// e.g. derive(seed, trial), derive(seed, agent, step).
std::uint64_t derive(std::uint64_t seed, std::uint64_t a);
std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// Counter-based Gaussian stream: draws depend only on (key, counter), so
/// identical keys reproduce identical sequences regardless of evaluation
/// order elsewhere.
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t key) : key_(key) {}

  double next();

  /// Zero-mean sample with the given covariance factor L (cov = L L^T).
  /// Columns of L that are exactly zero contribute exact zeros.
  Vector next_vector(const Matrix& factor);

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Symmetric factor L with cov = L L^T via eigendecomposition; rank-deficient
/// PSD covariances are legal (zero-variance directions give zero columns).
/// Throws NumericalError for covariances with eigenvalues below -1e-9.
Matrix covariance_factor(const Matrix& cov);

}  // namespace dals::rng
