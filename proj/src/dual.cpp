#include "enkf/dual.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "enkf/errors.hpp"

namespace enkf {

namespace {

void require_length(size_t got, size_t want, const char* what) {
  if (got != want)
    throw ValidationError(std::string(what) + " has length " + std::to_string(got) +
                          ", expected " + std::to_string(want));
}

}  // namespace

DualTrajectory backward_dual(const SystemModel& model, const GainSchedule& schedule,
                             const Vector& a, int T) {
  require_length(schedule.gains.size(), static_cast<size_t>(T), "gain schedule");
  DualTrajectory out;
  out.y.assign(static_cast<size_t>(T) + 1, Vector());
  out.u.assign(static_cast<size_t>(T), Vector());
  out.y[static_cast<size_t>(T)] = a;
  for (int t = T - 1; t >= 0; --t) {
    StepModel step = model.at(t);
    const Vector& ynext = out.y[static_cast<size_t>(t) + 1];
    Vector u = -schedule.gains[static_cast<size_t>(t)].transpose() * step.A.transpose() * ynext;
    out.y[static_cast<size_t>(t)] = step.A.transpose() * ynext + step.H.transpose() * u;
    out.u[static_cast<size_t>(t)] = std::move(u);
  }
  out.b = out.y[0];
  return out;
}

double dual_cost(const SystemModel& model, const std::vector<Vector>& y,
                 const std::vector<Vector>& u) {
  if (y.size() != u.size() + 1)
    throw ValidationError("dual_cost: y must have one more entry than u");
  const int T = static_cast<int>(u.size());
  double cost = y[0].dot(model.Sigma0 * y[0]);
  for (int t = 0; t < T; ++t) {
    StepModel step = model.at(t);
    const Vector& ynext = y[static_cast<size_t>(t) + 1];
    cost += ynext.dot(step.Q * ynext) + u[static_cast<size_t>(t)].dot(step.R * u[static_cast<size_t>(t)]);
  }
  return cost;
}

TransitionProducts build_transitions(const SystemModel& model, const GainSchedule& schedule,
                                     const std::vector<Matrix>& C_list, int T) {
  require_length(schedule.gains.size(), static_cast<size_t>(T), "gain schedule");
  require_length(C_list.size(), static_cast<size_t>(T), "C_list");
  TransitionProducts out;
  out.phi.assign(static_cast<size_t>(T) + 1, Matrix());
  out.psi.assign(static_cast<size_t>(T) + 1, Matrix());
  out.phi[static_cast<size_t>(T)] = Matrix::Identity(model.n, model.n);
  out.psi[static_cast<size_t>(T)] = Matrix::Identity(model.n, model.n);
  for (int t = T - 1; t >= 0; --t) {
    StepModel step = model.at(t);
    const Matrix& K = schedule.gains[static_cast<size_t>(t)];
    out.phi[static_cast<size_t>(t)] =
        (Matrix::Identity(model.n, model.n) - step.H.transpose() * K.transpose()) *
        step.A.transpose() * out.phi[static_cast<size_t>(t) + 1];
    out.psi[static_cast<size_t>(t)] = C_list[static_cast<size_t>(t)] * out.psi[static_cast<size_t>(t) + 1];
  }
  return out;
}

DualControls optimal_controls(const SystemModel& model, const GainSchedule& schedule,
                              const TransitionProducts& transitions, const Vector& a,
                              GammaPair gammas) {
  const int T = static_cast<int>(schedule.gains.size());
  require_length(transitions.phi.size(), static_cast<size_t>(T) + 1, "phi");
  require_length(transitions.psi.size(), static_cast<size_t>(T) + 1, "psi");
  DualControls out;
  out.a = a;
  out.gammas = gammas;
  out.b = transitions.phi[0] * a;
  out.c = transitions.psi[0] * a;
  out.u.reserve(static_cast<size_t>(T));
  out.v.reserve(static_cast<size_t>(T));
  out.w.reserve(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    StepModel step = model.at(t);
    const Matrix& K = schedule.gains[static_cast<size_t>(t)];
    Vector phi_a = transitions.phi[static_cast<size_t>(t) + 1] * a;
    Vector psi_a = transitions.psi[static_cast<size_t>(t) + 1] * a;
    out.u.push_back(-K.transpose() * step.A.transpose() * phi_a);
    out.v.push_back(gammas.gamma1 * psi_a);
    out.w.push_back(gammas.gamma2 * K.transpose() * step.A.transpose() * psi_a);
  }
  return out;
}

double batch_estimate(const DualControls& controls, const TransitionProducts& transitions,
                      const std::vector<Vector>& observations, const NoiseCopies& copies,
                      const SystemModel& model, const GainSchedule& schedule) {
  const size_t T = observations.size();
  require_length(transitions.phi.size(), T + 1, "phi");
  require_length(transitions.psi.size(), T + 1, "psi");
  require_length(copies.xi.size(), T, "xi copies");
  require_length(copies.zeta.size(), T, "zeta copies");
  require_length(schedule.gains.size(), T, "gain schedule");
  Vector acc = transitions.phi[0].transpose() * model.m0 +
               transitions.psi[0].transpose() * (copies.x0 - model.m0);
  for (size_t t = 0; t < T; ++t) {
    StepModel step = model.at(static_cast<int>(t));
    Matrix AK = step.A * schedule.gains[t];
    acc += transitions.phi[t + 1].transpose() * (AK * observations[t]);
    acc += controls.gammas.gamma1 * (transitions.psi[t + 1].transpose() * copies.xi[t]);
    acc += controls.gammas.gamma2 * (transitions.psi[t + 1].transpose() * (AK * copies.zeta[t]));
  }
  return controls.a.dot(acc);
}

double batch_estimate_from_controls(const DualControls& controls,
                                    const std::vector<Vector>& observations,
                                    const NoiseCopies& copies, const SystemModel& model) {
  const size_t T = observations.size();
  require_length(controls.u.size(), T, "u");
  require_length(controls.v.size(), T, "v");
  require_length(controls.w.size(), T, "w");
  double s = controls.b.dot(model.m0) + controls.c.dot(copies.x0 - model.m0);
  for (size_t t = 0; t < T; ++t) {
    s -= controls.u[t].dot(observations[t]);
    s += controls.v[t].dot(copies.xi[t]);
    s += controls.w[t].dot(copies.zeta[t]);
  }
  return s;
}

double second_moment_identity(const DualControls& controls, const TransitionProducts& transitions,
                              const SystemModel& model, const GainSchedule& schedule) {
  const size_t T = controls.u.size();
  require_length(schedule.covs.size(), T + 1, "covariance schedule");
  require_length(transitions.psi.size(), T + 1, "psi");
  double lhs = controls.c.dot(model.Sigma0 * controls.c);
  for (size_t t = 0; t < T; ++t) {
    StepModel step = model.at(static_cast<int>(t));
    lhs += controls.v[t].dot(step.Q * controls.v[t]);
    lhs += controls.w[t].dot(step.R * controls.w[t]);
  }
  double rhs = controls.a.dot(schedule.covs[T] * controls.a);
  return std::abs(lhs - rhs);
}

std::vector<Matrix> build_c_list(const SystemModel& model, const GainSchedule& schedule,
                                 const VariantSpec& spec, int T) {
  require_length(schedule.gains.size(), static_cast<size_t>(T), "gain schedule");
  validate_variant_for_model(spec, model);
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    StepModel step = model.at(t);
    const Matrix& Sigma = schedule.covs[static_cast<size_t>(t)];
    const Matrix& K = schedule.gains[static_cast<size_t>(t)];
    switch (spec.solver) {
      case SolverKind::stochastic:
        out.push_back(solve_stochastic(Sigma, K, step).C);
        break;
      case SolverKind::denkf:
        out.push_back(solve_denkf(Sigma, K, step).C);
        break;
      case SolverKind::ensrf_scalar:
        out.push_back(step.m == 1 ? solve_ensrf_scalar(Sigma, K, step).sol.C
                                  : solve_ensrf_serial(Sigma, step).C);
        break;
      case SolverKind::sqrt_general:
        out.push_back(solve_sqrt_general(Sigma, gamma_rhs(Sigma, K, step, spec.gammas)).C);
        break;
      case SolverKind::eakf_svd: {
        // Exercise the SVD route on an exact-moment anomaly set of Sigma_t.
        Matrix delta = exact_anomalies(Sigma, model.n + 1);
        out.push_back(solve_eakf_svd(delta, gamma_rhs(Sigma, K, step, spec.gammas)).C);
        break;
      }
      case SolverKind::etkf:
        throw ValidationError("etkf has no state-space transform; use the ensemble filter");
    }
  }
  return out;
}

double verify_batch_recursive(const SystemModel& model, const VariantSpec& spec, int T,
                              uint64_t seed) {
  SystemModel checked = model.checked ? model : validate_model(model);
  NoiseStreams streams{};
  streams.seed = seed;
  const GammaPair g = spec.gammas;

  std::vector<Vector> obs;
  if (T > 0) obs = simulate_truth(checked, T, streams).observations;
  KfResult kf = run_kf(checked, obs);
  std::vector<Matrix> C_list = build_c_list(checked, kf.schedule, spec, T);
  NoiseCopies copies = draw_all_copies(checked, T, streams, 0);

  // One-member recursion around the exact conditional mean.
  Vector mean = checked.m0;
  Vector x = copies.x0;
  for (int t = 0; t < T; ++t) {
    StepModel step = checked.at(t);
    const Matrix& K = kf.schedule.gains[static_cast<size_t>(t)];
    Vector innov = obs[static_cast<size_t>(t)] - step.H * mean;
    x = step.A * (mean + K * (innov + g.gamma2 * copies.zeta[static_cast<size_t>(t)])) +
        C_list[static_cast<size_t>(t)].transpose() * (x - mean) +
        g.gamma1 * copies.xi[static_cast<size_t>(t)];
    mean = step.A * (mean + K * innov);
  }

  TransitionProducts trans = build_transitions(checked, kf.schedule, C_list, T);
  double max_dev = 0.0;
  for (int i = 0; i < checked.n; ++i) {
    Vector a = Vector::Unit(checked.n, i);
    DualControls controls = optimal_controls(checked, kf.schedule, trans, a, g);
    double batch = batch_estimate(controls, trans, obs, copies, checked, kf.schedule);
    max_dev = std::max(max_dev, std::abs(a.dot(x) - batch));
  }
  return max_dev;
}

}  // namespace enkf
