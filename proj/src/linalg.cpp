#include "enkf/linalg.hpp"

#include <cmath>

#include "enkf/errors.hpp"

namespace enkf {

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double asymmetry(const Matrix& M) {
  double scale = std::max(1.0, M.norm());
  return (M - M.transpose()).norm() / scale;
}

double min_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix sqrt_psd(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  Vector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Matrix pinv_sqrt(const Matrix& M, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  const Vector& lam = es.eigenvalues();
  double cutoff = rel_tol * std::max(lam.maxCoeff(), 0.0);
  Vector inv = Vector::Zero(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] > cutoff && lam[i] > 0.0) inv[i] = 1.0 / std::sqrt(lam[i]);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Matrix pseudo_inverse(const Matrix& M, double rel_tol) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  double cutoff = rel_tol * (s.size() > 0 ? s[0] : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff && s[i] > 0.0) inv[i] = 1.0 / s[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix helmert_rows(int N) {
  if (N < 2) throw ValidationError("helmert_rows: N must be >= 2");
  Matrix V = Matrix::Zero(N - 1, N);
  for (int k = 1; k < N; ++k) {
    double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int j = 0; j < k; ++j) V(k - 1, j) = 1.0 / norm;
    V(k - 1, k) = -static_cast<double>(k) / norm;
  }
  return V;
}

Matrix exact_anomalies(const Matrix& cov, int N) {
  int n = static_cast<int>(cov.rows());
  if (N < n + 1) throw EnsembleTooSmall(N, n + 1);
  // delta = sqrt(N-1) * S * [I_n | 0] * V gives delta 1 = 0 and
  // delta delta^T = (N-1) S S^T = (N-1) cov exactly.
  Matrix V = helmert_rows(N);
  Matrix S = sqrt_psd(cov);
  return std::sqrt(static_cast<double>(N - 1)) * S * V.topRows(n);
}

}  // namespace enkf
