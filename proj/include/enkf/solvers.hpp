#pragma once

#include "enkf/kalman.hpp"
#include "enkf/variants.hpp"

namespace enkf {

// Anomaly transform C with defining property C^T Sigma C = Gamma.
// C is stored so the filter applies C^T to anomalies from the left.
struct CtSolution {
  Matrix C;
  double residual = 0.0;  // ||C^T Sigma C - Gamma||_F, reported, never hidden
  SolverKind method = SolverKind::sqrt_general;
};

struct EnsrfSolution {
  double alpha = 0.0;
  CtSolution sol;
};

// Member-weight transform: anomalies update as delta * W.
struct EtkfTransform {
  Matrix W;
  double subspace_residual = 0.0;  // ||delta W W^T delta^T/(N-1) - P Gamma P||_F
  double out_of_range = 0.0;       // ||Gamma - P Gamma P||_F, mass outside range(delta)
};

// Target covariance of the transformed anomalies:
//   Gamma = (A - b AKH) Sigma (A - b AKH)^T - c^2 AKH Sigma H^T K^T A^T
//           + (1 - gamma1^2) Q,
// with b = (1+gamma2^2)/2 and c = (1-gamma2^2)/2. These coefficients make
//   Gamma + gamma1^2 Q + gamma2^2 A K R K^T A^T = riccati_step(Sigma)
// an exact identity for every gamma pair; rhs_consistency certifies it.
Matrix gamma_rhs(const Matrix& Sigma, const Matrix& K, const StepModel& step, GammaPair g);

// Residual of the decomposition above, Frobenius norm.
double rhs_consistency(const Matrix& Sigma, const Matrix& K, const StepModel& step, GammaPair g);

// Closed form for gammas (1,1): C = (I - H^T K^T) A^T. Exact.
CtSolution solve_stochastic(const Matrix& Sigma, const Matrix& K, const StepModel& step);

// Half-gain form for gammas (1,0): C = (A - AKH/2)^T. Carries the fixed
// residual ||AKH Sigma H^T K^T A^T / 4||_F, and C^T Sigma C - Gamma is PSD.
CtSolution solve_denkf(const Matrix& Sigma, const Matrix& K, const StepModel& step);

// Scalar-observation reduction rate for gammas (1,0): alpha solves
// s a^2 - 2 a + 1 = 0 with s = H Sigma H^T / (H Sigma H^T + R); the branch
// alpha = 1/(1+sqrt(1-s)) is continuous with the half-gain limit at s -> 0.
// C = (A - alpha AKH)^T. Exact.
EnsrfSolution solve_ensrf_scalar(const Matrix& Sigma, const Matrix& K, const StepModel& step);

// Serial scalar updates in coordinate order for diagonal R: composes the
// per-coordinate rates on intermediate covariances. Exact for diagonal R.
CtSolution solve_ensrf_serial(const Matrix& Sigma, const StepModel& step);

// General square root: C = Sigma^{-1/2} L Gamma^{1/2} with symmetric PSD
// principal roots; Sigma^{-1/2} is the pseudo-inverse root and L an optional
// unitary factor (default identity). Throws IndefiniteGamma when Gamma has an
// eigenvalue below -1e-10*||Gamma||; smaller negatives are clipped to zero.
CtSolution solve_sqrt_general(const Matrix& Sigma, const Matrix& Gamma, const Matrix* L = nullptr);

// Inverse square root of the sample covariance on the ensemble range,
// sqrt(N-1) * U S^+ U^T from the thin SVD delta = U S V^T.
Matrix inverse_sqrt_from_anomalies(const Matrix& delta);

// Square-root transform taking Sigma^{-1/2} from the anomaly SVD; residual is
// measured against the sample covariance of delta.
CtSolution solve_eakf_svd(const Matrix& delta, const Matrix& Gamma);

// W = symmetric PSD root of (N-1) delta^+ Gamma (delta^+)^T, so that
// delta W W^T delta^T/(N-1) matches Gamma on the range of delta.
EtkfTransform etkf_transform(const Matrix& delta, const Matrix& Gamma);

// Relative floor below which a transform target counts as indefinite.
inline constexpr double kIndefiniteTol = 1e-10;

}  // namespace enkf
