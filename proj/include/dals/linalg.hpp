#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dals {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when an algorithm cannot produce a valid numerical result
/// (unstable closed loop, rank deficiency, non-convergence, ...).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on invalid configuration or malformed inputs.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace linalg {

/// Columnwise stacking of a matrix into a vector: entry (r,c) lands at c*rows + r.
Vector vec(const Matrix& m);

/// Inverse of vec for the given shape.
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Kronecker product; block (i,j) of the result is A(i,j)*B.
Matrix kron(const Matrix& a, const Matrix& b);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& m);

/// Solves P = Fbar*P*Fbar^T + C for a stable Fbar; the result is symmetrized.
/// Throws NumericalError when the spectral radius of Fbar is >= 1 - 1e-9.
Matrix solve_discrete_lyapunov(const Matrix& fbar, const Matrix& c);

/// Reference solver through the vectorized linear system
/// (I - Fbar ⊗ Fbar) vec(P) = vec(C).  Used as a cross-check oracle and as
/// the small-dimension path of solve_discrete_lyapunov.
Matrix solve_discrete_lyapunov_vectorized(const Matrix& fbar, const Matrix& c);

/// theta = (A^T A + mu I)^{-1} A^T b.  With mu = 0 the normal equations must
/// be nonsingular; rank deficiency raises NumericalError.
Vector ridge_lsq(const Matrix& a, const Vector& b, double mu);

/// Nearest symmetric PSD matrix: symmetrize, then clip negative eigenvalues.
Matrix psd_project(const Matrix& s);

enum class StructureKind { FullSymmetric, Diagonal, DiagonalMasked, Scalar };

/// Parameterization of a symmetric matrix by a reduced set of free entries.
/// Each free parameter k owns a symmetric basis matrix B_k; the matrix
/// represented by a parameter vector theta is sum_k theta_k * B_k.
class StructureMap {
public:
  static StructureMap full_symmetric(Eigen::Index dim);
  static StructureMap diagonal(Eigen::Index dim);
  /// Diagonal with some entries pinned to zero; active[i] marks a free entry.
  static StructureMap diagonal_masked(Eigen::Index dim, const std::vector<bool>& active);
  static StructureMap scalar();

  Eigen::Index dim() const { return dim_; }
  StructureKind kind() const { return kind_; }
  Eigen::Index param_count() const { return static_cast<Eigen::Index>(basis_.size()); }
  const std::vector<Matrix>& basis() const { return basis_; }

  /// The dim^2 x param_count matrix whose k-th column is vec(basis_k).
  Matrix columns() const;

  /// sum_k theta_k * basis_k.
  Matrix reconstruct(const Vector& theta) const;

  /// Least-squares extraction of parameters from a (nearly symmetric) matrix;
  /// exact inverse of reconstruct on the represented subspace.
  Vector extract(const Matrix& s) const;

private:
  StructureMap(Eigen::Index dim, StructureKind kind, std::vector<Matrix> basis);

  Eigen::Index dim_;
  StructureKind kind_;
  std::vector<Matrix> basis_;
};

}  // namespace linalg
}  // namespace dals
