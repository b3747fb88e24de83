#pragma once

#include <vector>

#include "enkf/solvers.hpp"

namespace enkf {

// Column j holds member j. t is the step the members represent.
struct EnsembleState {
  Matrix members;
  int t = 0;
  int size() const { return static_cast<int>(members.cols()); }
};

enum class InitMode { random, deterministic };

struct Anomalies {
  Vector mean;
  Matrix delta;  // columns sum to zero
};

// Per-step transform diagnostics carried alongside the ensemble.
struct StepDiagnostics {
  double ct_residual = 0.0;
  double rhs_residual = 0.0;
};

// Members drawn i.i.d. N(m0, Sigma0) from the copy-initial stream.
EnsembleState init_ensemble_random(const SystemModel& model, int N, const NoiseStreams& streams);

// Exact-moment start: sample mean m0 and sample covariance Sigma0 (divisor
// N-1) hold exactly. Requires N >= n+1.
EnsembleState init_ensemble_deterministic(const SystemModel& model, int N);

// Sample mean and recentered anomaly matrix.
Anomalies anomalies(const EnsembleState& ensemble);

// Gain for the current step: the oracle schedule entry, or the sample-based
// gain from the ensemble covariance.
Matrix effective_gain(const EnsembleState& ensemble, const SystemModel& model,
                      const GainSchedule& schedule, const VariantSpec& spec);

// One filter step: every member j moves by
//   X'_j = A (mean + K (z - H mean + gamma2 zeta_j)) + C^T (X_j - mean)
//          + gamma1 xi_j,
// with the subspace route replacing C^T delta by delta W. The covariance
// source for the transform always matches the gain source.
EnsembleState enkf_step(const EnsembleState& ensemble, const Vector& z, const SystemModel& model,
                        const GainSchedule& schedule, const VariantSpec& spec,
                        const NoiseStreams& streams, StepDiagnostics* diag = nullptr);

struct FilterRun {
  std::vector<EnsembleState> states;   // index t = 0..T
  std::vector<StepDiagnostics> steps;  // index t = 0..T-1
};

FilterRun run_filter(const SystemModel& model, const std::vector<Vector>& observations,
                     const VariantSpec& spec, int N, const NoiseStreams& streams,
                     InitMode init = InitMode::random);

}  // namespace enkf
