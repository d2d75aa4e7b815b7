#include "sgdm/linalg.hpp"

#include <algorithm>

#include "sgdm/error.hpp"

namespace sgdm::linalg {

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvalidInput("symmetric eigensolver failed");
  return solver.eigenvalues();
}

ComplexVector eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  if (solver.info() != Eigen::Success) throw InvalidInput("nonsymmetric eigensolver failed");
  return solver.eigenvalues();
}

double spectral_radius(const Matrix& m) { return eigenvalues(m).cwiseAbs().maxCoeff(); }

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidInput("matrix is not symmetric positive definite");
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

}  // namespace sgdm::linalg
