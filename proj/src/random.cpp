#include "dals/random.hpp"

#include <cmath>
#include <numbers>

namespace dals::rng {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
  return mix(mix(seed) ^ mix(a + 0x6a09e667f3bcc909ULL));
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive(derive(seed, a), b);
}

namespace {
// Uniform in (0,1]; never returns 0 so log() below is safe.
double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}
}  // namespace

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = to_unit(mix(key_ ^ mix(counter_++)));
  const double u2 = to_unit(mix(key_ ^ mix(counter_++)));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

Vector GaussianStream::next_vector(const Matrix& factor) {
  Vector z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = next();
  Vector out = Vector::Zero(factor.rows());
  // Column-by-column so exactly-zero columns leave exact zeros behind.
  for (Eigen::Index c = 0; c < factor.cols(); ++c) {
    if (factor.col(c).isZero(0.0)) continue;
    out += factor.col(c) * z(c);
  }
  return out;
}

Matrix covariance_factor(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw ConfigError("covariance_factor: matrix must be square");
  Matrix sym = 0.5 * (cov + cov.transpose());
  if (sym.isDiagonal(0.0)) {
    if (sym.diagonal().minCoeff() < -1e-9)
      throw NumericalError("covariance_factor: covariance is not PSD");
    return sym.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector& d = es.eigenvalues();
  if (d.size() > 0 && d.minCoeff() < -1e-9)
    throw NumericalError("covariance_factor: covariance is not PSD");
  Matrix factor = Matrix::Zero(cov.rows(), cov.cols());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) <= 0.0) continue;  // zero-variance direction
    factor.col(i) = es.eigenvectors().col(i) * std::sqrt(d(i));
  }
  return factor;
}

}  // namespace dals::rng
