#pragma once

#include <vector>

#include "enkf/kalman.hpp"
#include "enkf/solvers.hpp"

namespace enkf {

// Parameters of the linear estimator of a^T X_T built from data and noise
// copies: estimate = b^T m0 - sum u_t^T Z_t + c^T(X0~ - m0) + sum v_t^T xi~_t
//                    + sum w_t^T zeta~_t.
struct DualControls {
  Vector a, b, c;
  std::vector<Vector> u, v, w;  // lengths T
  GammaPair gammas;
};

// Backward closed-loop transition products, index t = 0..T:
//   phi[t] = Phi_{T,t}, phi[T] = I, phi[t] = (I - H^T K_t^T) A_t^T phi[t+1]
//   psi[t] = Psi_{T,t}, psi[T] = I, psi[t] = C_t psi[t+1]
struct TransitionProducts {
  std::vector<Matrix> phi, psi;
};

// Backward adjoint recursion y_T = a, y_t = A_t^T y_{t+1} + H_t^T u_t with the
// minimizing control u_t = -K_t^T A_t^T y_{t+1}; b = y_0.
struct DualTrajectory {
  std::vector<Vector> y;  // y_0 .. y_T
  std::vector<Vector> u;  // u_0 .. u_{T-1}
  Vector b;
};

DualTrajectory backward_dual(const SystemModel& model, const GainSchedule& schedule,
                             const Vector& a, int T);

// Quadratic control cost y_0^T Sigma0 y_0 + sum (y_{t+1}^T Q_t y_{t+1}
// + u_t^T R_t u_t). At the minimizing control it equals a^T Sigma_T a.
double dual_cost(const SystemModel& model, const std::vector<Vector>& y,
                 const std::vector<Vector>& u);

TransitionProducts build_transitions(const SystemModel& model, const GainSchedule& schedule,
                                     const std::vector<Matrix>& C_list, int T);

// Minimizing estimator parameters for direction a:
//   b = phi[0] a, u_t = -K_t^T A_t^T phi[t+1] a, c = psi[0] a,
//   v_t = gamma1 psi[t+1] a, w_t = gamma2 K_t^T A_t^T psi[t+1] a.
DualControls optimal_controls(const SystemModel& model, const GainSchedule& schedule,
                              const TransitionProducts& transitions, const Vector& a,
                              GammaPair gammas);

// Direct evaluation of the batch estimate through the transition products:
//   a^T ( phi[0]^T m0 + sum phi[t+1]^T A_t K_t Z_t + psi[0]^T (X0~ - m0)
//         + gamma1 sum psi[t+1]^T xi~_t + gamma2 sum psi[t+1]^T A_t K_t zeta~_t ).
double batch_estimate(const DualControls& controls, const TransitionProducts& transitions,
                      const std::vector<Vector>& observations, const NoiseCopies& copies,
                      const SystemModel& model, const GainSchedule& schedule);

// Same estimator evaluated from the control parameters alone; an independent
// route used to cross-check batch_estimate.
double batch_estimate_from_controls(const DualControls& controls,
                                    const std::vector<Vector>& observations,
                                    const NoiseCopies& copies, const SystemModel& model);

// |c^T Sigma0 c + sum v_t^T Q_t v_t + sum w_t^T R_t w_t - a^T Sigma_T a|.
// Zero whenever every C_t satisfies its defining covariance property exactly.
double second_moment_identity(const DualControls& controls, const TransitionProducts& transitions,
                              const SystemModel& model, const GainSchedule& schedule);

// Per-step transforms for a variant, built from the oracle schedule.
std::vector<Matrix> build_c_list(const SystemModel& model, const GainSchedule& schedule,
                                 const VariantSpec& spec, int T);

// Runs one member of the recursive filter and the batch estimator on the same
// realized observations and noise copies; returns the max deviation of
// a^T X_T between the two routes over the canonical directions a = e_i.
double verify_batch_recursive(const SystemModel& model, const VariantSpec& spec, int T,
                              uint64_t seed);

}  // namespace enkf
