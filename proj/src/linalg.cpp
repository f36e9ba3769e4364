#include "dals/linalg.hpp"

#include <cmath>

namespace dals::linalg {

namespace {
constexpr double kStabilityMargin = 1e-9;
constexpr double kLyapunovTol = 1e-12;
constexpr int kLyapunovCap = 200;  // squared-iterate steps, covers > 1e6 plain iterations
}  // namespace

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw ConfigError("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix solve_discrete_lyapunov_vectorized(const Matrix& fbar, const Matrix& c) {
  const Eigen::Index n = fbar.rows();
  Matrix lhs = Matrix::Identity(n * n, n * n) - kron(fbar, fbar);
  Vector p = lhs.partialPivLu().solve(vec(c));
  Matrix out = unvec(p, n, n);
  return 0.5 * (out + out.transpose());
}

Matrix solve_discrete_lyapunov(const Matrix& fbar, const Matrix& c) {
  if (fbar.rows() != fbar.cols() || c.rows() != c.cols() || c.rows() != fbar.rows())
    throw ConfigError("solve_discrete_lyapunov: dimension mismatch");
  if (spectral_radius(fbar) >= 1.0 - kStabilityMargin)
    throw NumericalError("solve_discrete_lyapunov: Fbar is not stable (closed loop F - KHF)");

  const Eigen::Index n = fbar.rows();
  if (n <= 25) return solve_discrete_lyapunov_vectorized(fbar, c);

  // Squared fixed-point iteration: P <- P + A P A^T, A <- A^2 doubles the
  // effective number of plain P <- Fbar P Fbar^T + C sweeps each step.
  Matrix p = 0.5 * (c + c.transpose());
  Matrix a = fbar;
  for (int it = 0; it < kLyapunovCap; ++it) {
    Matrix next = p + a * p * a.transpose();
    double delta = (next - p).cwiseAbs().maxCoeff();
    p = next;
    a = a * a;
    if (delta < kLyapunovTol) break;
  }
  return 0.5 * (p + p.transpose());
}

Vector ridge_lsq(const Matrix& a, const Vector& b, double mu) {
  if (a.rows() != b.size()) throw ConfigError("ridge_lsq: dimension mismatch");
  if (mu < 0.0) throw ConfigError("ridge_lsq: mu must be >= 0");
  if (mu == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < a.cols())
      throw NumericalError("ridge_lsq: coefficient matrix is rank deficient (full column rank required)");
    return qr.solve(b);
  }
  const Matrix gram = a.transpose() * a + mu * Matrix::Identity(a.cols(), a.cols());
  return gram.ldlt().solve(a.transpose() * b);
}

Matrix psd_project(const Matrix& s) {
  if (s.rows() != s.cols()) throw ConfigError("psd_project: matrix must be square");
  Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector d = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

StructureMap::StructureMap(Eigen::Index dim, StructureKind kind, std::vector<Matrix> basis)
    : dim_(dim), kind_(kind), basis_(std::move(basis)) {}

StructureMap StructureMap::full_symmetric(Eigen::Index dim) {
  std::vector<Matrix> basis;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j) {
      Matrix b = Matrix::Zero(dim, dim);
      b(i, j) = 1.0;
      b(j, i) = 1.0;
      basis.push_back(b);
    }
  return StructureMap(dim, StructureKind::FullSymmetric, std::move(basis));
}

StructureMap StructureMap::diagonal(Eigen::Index dim) {
  std::vector<Matrix> basis;
  for (Eigen::Index i = 0; i < dim; ++i) {
    Matrix b = Matrix::Zero(dim, dim);
    b(i, i) = 1.0;
    basis.push_back(b);
  }
  return StructureMap(dim, StructureKind::Diagonal, std::move(basis));
}

StructureMap StructureMap::diagonal_masked(Eigen::Index dim, const std::vector<bool>& active) {
  if (static_cast<Eigen::Index>(active.size()) != dim)
    throw ConfigError("StructureMap: mask length must equal dimension");
  std::vector<Matrix> basis;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!active[static_cast<size_t>(i)]) continue;
    Matrix b = Matrix::Zero(dim, dim);
    b(i, i) = 1.0;
    basis.push_back(b);
  }
  return StructureMap(dim, StructureKind::DiagonalMasked, std::move(basis));
}

StructureMap StructureMap::scalar() {
  std::vector<Matrix> basis{Matrix::Identity(1, 1)};
  return StructureMap(1, StructureKind::Scalar, std::move(basis));
}

Matrix StructureMap::columns() const {
  Matrix cols(dim_ * dim_, param_count());
  for (Eigen::Index k = 0; k < param_count(); ++k)
    cols.col(k) = vec(basis_[static_cast<size_t>(k)]);
  return cols;
}

Matrix StructureMap::reconstruct(const Vector& theta) const {
  if (theta.size() != param_count()) throw ConfigError("StructureMap: parameter count mismatch");
  Matrix out = Matrix::Zero(dim_, dim_);
  for (Eigen::Index k = 0; k < param_count(); ++k)
    out += theta(k) * basis_[static_cast<size_t>(k)];
  return out;
}

Vector StructureMap::extract(const Matrix& s) const {
  if (s.rows() != dim_ || s.cols() != dim_) throw ConfigError("StructureMap: dimension mismatch");
  const Matrix c = columns();
  return (c.transpose() * c).ldlt().solve(c.transpose() * vec(s));
}

}  // namespace dals::linalg
