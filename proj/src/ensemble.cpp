#include "enkf/ensemble.hpp"

#include <string>

#include "enkf/errors.hpp"

namespace enkf {

EnsembleState init_ensemble_random(const SystemModel& model, int N, const NoiseStreams& streams) {
  if (N < 2) throw EnsembleTooSmall(N, 2);
  if (!model.checked) throw ValidationError("init_ensemble_random requires a validated model");
  Matrix draws(model.n, N);
  for (int j = 0; j < N; ++j)
    normal_draws_into(streams.seed, streams.copy_init, 0, static_cast<uint64_t>(j),
                      draws.col(j));
  EnsembleState out;
  out.members = model.sqrt_Sigma0 * draws;
  out.members.colwise() += model.m0;
  out.t = 0;
  return out;
}

EnsembleState init_ensemble_deterministic(const SystemModel& model, int N) {
  if (!model.checked) throw ValidationError("init_ensemble_deterministic requires a validated model");
  EnsembleState out;
  out.members = exact_anomalies(model.Sigma0, N);
  out.members.colwise() += model.m0;
  out.t = 0;
  return out;
}

Anomalies anomalies(const EnsembleState& ensemble) {
  if (ensemble.size() < 2) throw EnsembleTooSmall(ensemble.size(), 2);
  Anomalies out;
  out.mean = ensemble.members.rowwise().mean();
  out.delta = ensemble.members.colwise() - out.mean;
  // Second pass pins the column sum at the rounding floor.
  Vector res = out.delta.rowwise().mean();
  out.delta.colwise() -= res;
  return out;
}

Matrix effective_gain(const EnsembleState& ensemble, const SystemModel& model,
                      const GainSchedule& schedule, const VariantSpec& spec) {
  StepModel step = model.at(ensemble.t);
  if (spec.gain_source == GainSource::oracle) {
    if (static_cast<size_t>(ensemble.t) >= schedule.gains.size())
      throw ValidationError("oracle gain schedule does not cover step " +
                            std::to_string(ensemble.t));
    return schedule.gains[static_cast<size_t>(ensemble.t)];
  }
  Anomalies an = anomalies(ensemble);
  Matrix sample = an.delta * an.delta.transpose() / static_cast<double>(ensemble.size() - 1);
  return kalman_gain(sample, step);
}

EnsembleState enkf_step(const EnsembleState& ensemble, const Vector& z, const SystemModel& model,
                        const GainSchedule& schedule, const VariantSpec& spec,
                        const NoiseStreams& streams, StepDiagnostics* diag) {
  validate_variant_for_model(spec, model);
  const int t = ensemble.t;
  const int N = ensemble.size();
  const StepModel step = model.at(t);
  const GammaPair g = spec.gammas;

  Anomalies an = anomalies(ensemble);
  Matrix sigma_src;
  if (spec.gain_source == GainSource::oracle) {
    if (static_cast<size_t>(t) >= schedule.covs.size())
      throw ValidationError("oracle covariance schedule does not cover step " + std::to_string(t));
    sigma_src = schedule.covs[static_cast<size_t>(t)];
  } else {
    sigma_src = an.delta * an.delta.transpose() / static_cast<double>(N - 1);
  }
  Matrix K = spec.gain_source == GainSource::oracle
                 ? schedule.gains[static_cast<size_t>(t)]
                 : kalman_gain(sigma_src, step);

  StepDiagnostics d;
  d.rhs_residual = rhs_consistency(sigma_src, K, step, g);

  Matrix new_delta;
  try {
    switch (spec.solver) {
      case SolverKind::stochastic: {
        CtSolution sol = solve_stochastic(sigma_src, K, step);
        d.ct_residual = sol.residual;
        new_delta = sol.C.transpose() * an.delta;
        break;
      }
      case SolverKind::denkf: {
        CtSolution sol = solve_denkf(sigma_src, K, step);
        d.ct_residual = sol.residual;
        new_delta = sol.C.transpose() * an.delta;
        break;
      }
      case SolverKind::ensrf_scalar: {
        CtSolution sol = step.m == 1 ? solve_ensrf_scalar(sigma_src, K, step).sol
                                     : solve_ensrf_serial(sigma_src, step);
        d.ct_residual = sol.residual;
        new_delta = sol.C.transpose() * an.delta;
        break;
      }
      case SolverKind::sqrt_general: {
        CtSolution sol = solve_sqrt_general(sigma_src, gamma_rhs(sigma_src, K, step, g));
        d.ct_residual = sol.residual;
        new_delta = sol.C.transpose() * an.delta;
        break;
      }
      case SolverKind::eakf_svd: {
        CtSolution sol = solve_eakf_svd(an.delta, gamma_rhs(sigma_src, K, step, g));
        d.ct_residual = sol.residual;
        new_delta = sol.C.transpose() * an.delta;
        break;
      }
      case SolverKind::etkf: {
        EtkfTransform tr = etkf_transform(an.delta, gamma_rhs(sigma_src, K, step, g));
        d.ct_residual = tr.subspace_residual;
        new_delta = an.delta * tr.W;
        break;
      }
    }
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at step " + std::to_string(t));
  }

  Vector base = step.A * (an.mean + K * (z - step.H * an.mean));
  EnsembleState out;
  out.members = std::move(new_delta);
  out.members.colwise() += base;
  if (g.gamma2 > 0.0) {
    Matrix zeta(step.m, N);
    for (int j = 0; j < N; ++j)
      normal_draws_into(streams.seed, streams.copy_meas, static_cast<uint64_t>(t),
                        static_cast<uint64_t>(j), zeta.col(j));
    out.members += (g.gamma2 * (step.A * K) * model.sqrt_r(t)) * zeta;
  }
  if (g.gamma1 > 0.0) {
    Matrix xi(step.n, N);
    for (int j = 0; j < N; ++j)
      normal_draws_into(streams.seed, streams.copy_process, static_cast<uint64_t>(t),
                        static_cast<uint64_t>(j), xi.col(j));
    out.members += g.gamma1 * model.sqrt_q(t) * xi;
  }
  out.t = t + 1;
  if (diag != nullptr) *diag = d;
  return out;
}

FilterRun run_filter(const SystemModel& model, const std::vector<Vector>& observations,
                     const VariantSpec& spec, int N, const NoiseStreams& streams, InitMode init) {
  if (!model.checked) throw ValidationError("run_filter requires a validated model");
  validate_variant_for_model(spec, model);
  const int T = static_cast<int>(observations.size());

  GainSchedule schedule;
  if (spec.gain_source == GainSource::oracle) schedule = run_kf(model, observations).schedule;

  FilterRun run;
  run.states.reserve(static_cast<size_t>(T) + 1);
  run.steps.reserve(static_cast<size_t>(T));
  run.states.push_back(init == InitMode::random ? init_ensemble_random(model, N, streams)
                                                : init_ensemble_deterministic(model, N));
  for (int t = 0; t < T; ++t) {
    StepDiagnostics diag;
    run.states.push_back(enkf_step(run.states.back(), observations[static_cast<size_t>(t)], model,
                                   schedule, spec, streams, &diag));
    run.steps.push_back(diag);
  }
  return run;
}

}  // namespace enkf
