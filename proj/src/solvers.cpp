#include "enkf/solvers.hpp"

#include <cmath>
#include <limits>

#include "enkf/errors.hpp"

namespace enkf {

namespace {

double residual_norm(const Matrix& C, const Matrix& Sigma, const Matrix& Gamma) {
  return (C.transpose() * symmetrize(Sigma) * C - Gamma).norm();
}

}  // namespace

Matrix gamma_rhs(const Matrix& Sigma, const Matrix& K, const StepModel& step, GammaPair g) {
  const double b = 0.5 * (1.0 + g.gamma2 * g.gamma2);
  const double c = 0.5 * (1.0 - g.gamma2 * g.gamma2);
  Matrix Sym = symmetrize(Sigma);
  Matrix AKH = step.A * K * step.H;
  Matrix G0 = step.A - b * AKH;
  Matrix AK = step.A * K;
  Matrix HSH = step.H * Sym * step.H.transpose();
  Matrix out = G0 * Sym * G0.transpose() - (c * c) * AK * HSH * AK.transpose() +
               (1.0 - g.gamma1 * g.gamma1) * step.Q;
  return symmetrize(out);
}

double rhs_consistency(const Matrix& Sigma, const Matrix& K, const StepModel& step, GammaPair g) {
  Matrix Gamma = gamma_rhs(Sigma, K, step, g);
  Matrix AK = step.A * K;
  Matrix lhs = Gamma + (g.gamma1 * g.gamma1) * step.Q +
               (g.gamma2 * g.gamma2) * AK * step.R * AK.transpose();
  return (lhs - riccati_step(Sigma, step)).norm();
}

CtSolution solve_stochastic(const Matrix& Sigma, const Matrix& K, const StepModel& step) {
  CtSolution out;
  out.method = SolverKind::stochastic;
  out.C = (Matrix::Identity(step.n, step.n) - step.H.transpose() * K.transpose()) *
          step.A.transpose();
  out.residual = residual_norm(out.C, Sigma, gamma_rhs(Sigma, K, step, {1.0, 1.0}));
  return out;
}

CtSolution solve_denkf(const Matrix& Sigma, const Matrix& K, const StepModel& step) {
  CtSolution out;
  out.method = SolverKind::denkf;
  out.C = (step.A - 0.5 * step.A * K * step.H).transpose();
  out.residual = residual_norm(out.C, Sigma, gamma_rhs(Sigma, K, step, {1.0, 0.0}));
  return out;
}

EnsrfSolution solve_ensrf_scalar(const Matrix& Sigma, const Matrix& K, const StepModel& step) {
  if (step.m != 1) throw NotScalarObservation(step.m);
  Matrix Sym = symmetrize(Sigma);
  double hsh = (step.H * Sym * step.H.transpose())(0, 0);
  double s = hsh / (hsh + step.R(0, 0));
  EnsrfSolution out;
  out.alpha = 1.0 / (1.0 + std::sqrt(std::max(0.0, 1.0 - s)));
  out.sol.method = SolverKind::ensrf_scalar;
  out.sol.C = (step.A - out.alpha * step.A * K * step.H).transpose();
  out.sol.residual = residual_norm(out.sol.C, Sym, gamma_rhs(Sym, K, step, {1.0, 0.0}));
  return out;
}

CtSolution solve_ensrf_serial(const Matrix& Sigma, const StepModel& step) {
  Matrix off = step.R - Matrix(step.R.diagonal().asDiagonal());
  if (step.m > 1 && off.norm() > kPsdTol * std::max(1.0, step.R.norm()))
    throw ValidationError("serial scalar updates require a diagonal R");
  Matrix Sym = symmetrize(Sigma);
  Matrix M = Matrix::Identity(step.n, step.n);
  Matrix Scur = Sym;
  for (int i = 0; i < step.m; ++i) {
    Eigen::RowVectorXd h = step.H.row(i);
    double d = (h * Scur * h.transpose())(0) + step.R(i, i);
    if (d <= 0.0) throw SingularInnovation(std::numeric_limits<double>::infinity());
    Vector k = (Scur * h.transpose()) / d;
    double s = (h * Scur * h.transpose())(0) / d;
    double alpha = 1.0 / (1.0 + std::sqrt(std::max(0.0, 1.0 - s)));
    Matrix F = Matrix::Identity(step.n, step.n) - alpha * k * h;
    // F Scur F^T equals the scalar-update posterior (I - k h) Scur exactly.
    M = F * M;
    Scur = symmetrize(Scur - (Scur * h.transpose()) * (h * Scur) / d);
  }
  CtSolution out;
  out.method = SolverKind::ensrf_scalar;
  out.C = (step.A * M).transpose();
  Matrix K = kalman_gain(Sym, step);
  out.residual = residual_norm(out.C, Sym, gamma_rhs(Sym, K, step, {1.0, 0.0}));
  return out;
}

CtSolution solve_sqrt_general(const Matrix& Sigma, const Matrix& Gamma, const Matrix* L) {
  Matrix G = symmetrize(Gamma);
  double floor = -kIndefiniteTol * std::max(1.0, G.norm());
  double lam = min_eigenvalue(G);
  if (lam < floor) throw IndefiniteGamma(lam);
  CtSolution out;
  out.method = SolverKind::sqrt_general;
  Matrix half = sqrt_psd(G);
  Matrix inv_half = pinv_sqrt(Sigma);
  out.C = (L != nullptr) ? Matrix(inv_half * (*L) * half) : Matrix(inv_half * half);
  out.residual = residual_norm(out.C, Sigma, G);
  return out;
}

Matrix inverse_sqrt_from_anomalies(const Matrix& delta) {
  const auto N = delta.cols();
  Eigen::JacobiSVD<Matrix> svd(delta, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  double cutoff = kPinvTol * (s.size() > 0 ? s[0] : 0.0);
  if (s.size() == 0 || s[0] <= 0.0) throw DegenerateEnsemble("zero anomaly matrix");
  Vector inv = Vector::Zero(s.size());
  int live = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff) {
      inv[i] = 1.0 / s[i];
      ++live;
    }
  }
  if (live == 0) throw DegenerateEnsemble("all singular values below threshold");
  return std::sqrt(static_cast<double>(N - 1)) * svd.matrixU() * inv.asDiagonal() *
         svd.matrixU().transpose();
}

CtSolution solve_eakf_svd(const Matrix& delta, const Matrix& Gamma) {
  Matrix G = symmetrize(Gamma);
  double lam = min_eigenvalue(G);
  if (lam < -kIndefiniteTol * std::max(1.0, G.norm())) throw IndefiniteGamma(lam);
  CtSolution out;
  out.method = SolverKind::eakf_svd;
  out.C = inverse_sqrt_from_anomalies(delta) * sqrt_psd(G);
  Matrix sample = delta * delta.transpose() / static_cast<double>(delta.cols() - 1);
  out.residual = residual_norm(out.C, sample, G);
  return out;
}

EtkfTransform etkf_transform(const Matrix& delta, const Matrix& Gamma) {
  const auto N = delta.cols();
  if (N < 2) throw DegenerateEnsemble("need at least two members");
  Matrix G = symmetrize(Gamma);
  double lam = min_eigenvalue(G);
  if (lam < -kIndefiniteTol * std::max(1.0, G.norm())) throw IndefiniteGamma(lam);
  Matrix pinv = pseudo_inverse(delta);
  if (delta.norm() == 0.0) throw DegenerateEnsemble("zero anomaly matrix");
  Matrix M = symmetrize(static_cast<double>(N - 1) * pinv * G * pinv.transpose());
  EtkfTransform out;
  // Root with a relative eigenvalue cutoff: plain clipping at zero would turn
  // O(eps) null-space noise into O(sqrt(eps)) weights and break W 1 = 0.
  {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
    Vector vals = eig.eigenvalues();
    double cutoff = kPinvTol * std::max(0.0, vals.maxCoeff());
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      vals[i] = vals[i] > cutoff ? std::sqrt(vals[i]) : 0.0;
    out.W = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  }
  Matrix realized = delta * out.W * out.W.transpose() * delta.transpose() /
                    static_cast<double>(N - 1);
  // P projects onto range(delta); the defining relation can only hold there.
  Matrix P = delta * pinv;
  Matrix projected = P * G * P.transpose();
  out.subspace_residual = (realized - projected).norm();
  out.out_of_range = (G - projected).norm();
  return out;
}

}  // namespace enkf
