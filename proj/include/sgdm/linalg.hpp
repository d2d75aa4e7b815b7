#pragma once

#include <complex>

#include <Eigen/Dense>

namespace sgdm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;

namespace linalg {

/// Max |a_ij - a_ji| relative to max |a_ij|.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

/// Ascending eigenvalues of a symmetric matrix.
Vector symmetric_eigenvalues(const Matrix& m);

/// Eigenvalues of a general real matrix (real Schur / Hessenberg QR).
ComplexVector eigenvalues(const Matrix& m);

/// max |eig(m)| through the dense nonsymmetric eigensolver.
double spectral_radius(const Matrix& m);

/// Operator 2-norm (largest singular value).
double spectral_norm(const Matrix& m);

/// Inverse of a symmetric positive definite matrix via Cholesky; throws InvalidInput if not PD.
Matrix spd_inverse(const Matrix& m);

}  // namespace linalg
}  // namespace sgdm
