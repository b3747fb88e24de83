#pragma once

#include <utility>
#include <vector>

#include "enkf/linalg.hpp"
#include "enkf/rng.hpp"

namespace enkf {

// One time slice of the model: X_{t+1} = A X_t + xi_t, Z_t = H X_t + zeta_t.
struct StepModel {
  const Matrix& A;
  const Matrix& H;
  const Matrix& Q;
  const Matrix& R;
  int n;
  int m;
};

// Linear-Gaussian state-space model. Each matrix is stored as a per-step
// sequence; a sequence of length one broadcasts to every step.
// X_0 ~ N(m0, Sigma0).
struct SystemModel {
  int n = 0;
  int m = 0;
  std::vector<Matrix> A, H, Q, R;
  Vector m0;
  Matrix Sigma0;

  // Filled by validate_model; sampling operations require a checked model.
  std::vector<Matrix> sqrt_Q, sqrt_R;
  Matrix sqrt_Sigma0;
  bool checked = false;

  StepModel at(int t) const;
  const Matrix& sqrt_q(int t) const;
  const Matrix& sqrt_r(int t) const;
};

// Convenience for constant-coefficient models.
SystemModel make_model(Matrix A, Matrix H, Matrix Q, Matrix R, Vector m0, Matrix Sigma0);

// Checks dimensions, symmetry (1e-12 relative) and definiteness (eigenvalue
// floor -1e-12*||M||; R strictly positive definite), then returns the model
// with sampling square roots precomputed.
SystemModel validate_model(SystemModel model);

struct Trajectory {
  std::vector<Vector> states;        // X_0 .. X_T
  std::vector<Vector> observations;  // Z_0 .. Z_{T-1}
};

Trajectory simulate_truth(const SystemModel& model, int T, const NoiseStreams& streams);

// Member-specific copy of the process/measurement noise pair at step t.
// Same (member, t) always returns identical values.
std::pair<Vector, Vector> draw_copies(const NoiseStreams& streams, const SystemModel& model,
                                      uint64_t member, int t);

// Member-specific copy of the initial condition, ~ N(m0, Sigma0).
Vector draw_copy_x0(const NoiseStreams& streams, const SystemModel& model, uint64_t member);

// All realized copies one member consumes over a horizon.
struct NoiseCopies {
  Vector x0;
  std::vector<Vector> xi;
  std::vector<Vector> zeta;
};

NoiseCopies draw_all_copies(const SystemModel& model, int T, const NoiseStreams& streams,
                            uint64_t member);

}  // namespace enkf
