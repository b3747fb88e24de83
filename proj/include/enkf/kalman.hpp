#pragma once

#include <vector>

#include "enkf/model.hpp"

namespace enkf {

// Conditional law N(m_t, Sigma_t) of X_t given Z_0..Z_{t-1}.
struct GaussianBelief {
  Vector mean;
  Matrix cov;
};

// Exact gains K_0..K_{T-1} and covariances Sigma_0..Sigma_T of one filter run.
struct GainSchedule {
  std::vector<Matrix> gains;
  std::vector<Matrix> covs;
};

// Condition-number guard for the innovation covariance H Sigma H^T + R.
inline constexpr double kInnovCondLimit = 1e14;

// Solves (H Sigma H^T + R) X = B by symmetric eigendecomposition.
Matrix innovation_solve(const Matrix& S, const Matrix& B);

// K = Sigma H^T (H Sigma H^T + R)^{-1}.
Matrix kalman_gain(const Matrix& Sigma, const StepModel& step);

// Sigma' = A Sigma A^T + Q - A Sigma H^T (H Sigma H^T + R)^{-1} H Sigma A^T,
// symmetrized.
Matrix riccati_step(const Matrix& Sigma, const StepModel& step);

// m' = A (m + K (z - H m)).
Vector kf_mean_step(const GaussianBelief& belief, const Vector& z, const StepModel& step);

struct KfResult {
  std::vector<GaussianBelief> beliefs;  // index t = 0..T
  GainSchedule schedule;
};

// Runs the exact filter over the whole observation sequence, starting from
// the prior N(m0, Sigma0). The covariance recursion is data-independent.
KfResult run_kf(const SystemModel& model, const std::vector<Vector>& observations);

}  // namespace enkf
