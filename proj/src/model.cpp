#include "enkf/model.hpp"

#include <string>

#include "enkf/errors.hpp"

namespace enkf {

namespace {

const Matrix& pick(const std::vector<Matrix>& seq, int t, const char* name) {
  if (seq.empty()) throw ValidationError(std::string(name) + ": empty matrix sequence");
  if (seq.size() == 1) return seq[0];
  if (t < 0 || static_cast<size_t>(t) >= seq.size())
    throw ValidationError(std::string(name) + ": no entry for step " + std::to_string(t));
  return seq[static_cast<size_t>(t)];
}

void check_shape(const Matrix& M, int rows, int cols, const std::string& name) {
  if (M.rows() != rows || M.cols() != cols)
    throw DimensionMismatch(name + " is " + std::to_string(M.rows()) + "x" +
                            std::to_string(M.cols()) + ", expected " + std::to_string(rows) + "x" +
                            std::to_string(cols));
}

void check_sym_psd(const Matrix& M, const std::string& name, bool needs_definite) {
  if (asymmetry(M) > kPsdTol) throw AsymmetricMatrix(name);
  double lam = min_eigenvalue(M);
  double floor = -kPsdTol * std::max(1.0, M.norm());
  if (needs_definite ? (lam <= 0.0) : (lam < floor)) throw NotPsd(name, lam, needs_definite);
}

}  // namespace

StepModel SystemModel::at(int t) const {
  return {pick(A, t, "A"), pick(H, t, "H"), pick(Q, t, "Q"), pick(R, t, "R"), n, m};
}

const Matrix& SystemModel::sqrt_q(int t) const {
  if (!checked) throw ValidationError("model not validated before sampling");
  return pick(sqrt_Q, t, "sqrt_Q");
}

const Matrix& SystemModel::sqrt_r(int t) const {
  if (!checked) throw ValidationError("model not validated before sampling");
  return pick(sqrt_R, t, "sqrt_R");
}

SystemModel make_model(Matrix A, Matrix H, Matrix Q, Matrix R, Vector m0, Matrix Sigma0) {
  SystemModel model;
  model.n = static_cast<int>(A.rows());
  model.m = static_cast<int>(H.rows());
  model.A = {std::move(A)};
  model.H = {std::move(H)};
  model.Q = {std::move(Q)};
  model.R = {std::move(R)};
  model.m0 = std::move(m0);
  model.Sigma0 = std::move(Sigma0);
  return model;
}

SystemModel validate_model(SystemModel model) {
  if (model.n <= 0 || model.m <= 0)
    throw ValidationError("model dimensions must be positive, got n=" + std::to_string(model.n) +
                          " m=" + std::to_string(model.m));
  for (const auto& M : model.A) check_shape(M, model.n, model.n, "A");
  for (const auto& M : model.H) check_shape(M, model.m, model.n, "H");
  for (const auto& M : model.Q) {
    check_shape(M, model.n, model.n, "Q");
    check_sym_psd(M, "Q", false);
  }
  for (const auto& M : model.R) {
    check_shape(M, model.m, model.m, "R");
    check_sym_psd(M, "R", true);
  }
  check_shape(model.Sigma0, model.n, model.n, "Sigma0");
  check_sym_psd(model.Sigma0, "Sigma0", false);
  if (model.m0.size() != model.n)
    throw DimensionMismatch("m0 has length " + std::to_string(model.m0.size()) + ", expected " +
                            std::to_string(model.n));
  if (model.A.empty() || model.H.empty() || model.Q.empty() || model.R.empty())
    throw ValidationError("model matrix sequences must be nonempty");

  model.sqrt_Q.clear();
  model.sqrt_R.clear();
  for (const auto& M : model.Q) model.sqrt_Q.push_back(sqrt_psd(M));
  for (const auto& M : model.R) model.sqrt_R.push_back(sqrt_psd(M));
  model.sqrt_Sigma0 = sqrt_psd(model.Sigma0);
  model.checked = true;
  return model;
}

Trajectory simulate_truth(const SystemModel& model, int T, const NoiseStreams& streams) {
  if (!model.checked) throw ValidationError("simulate_truth requires a validated model");
  if (T < 1) throw ValidationError("horizon must be >= 1");
  Trajectory traj;
  traj.states.reserve(static_cast<size_t>(T) + 1);
  traj.observations.reserve(static_cast<size_t>(T));
  Vector x = model.m0 +
             model.sqrt_Sigma0 * normal_draws(streams.seed, streams.truth_init, 0, 0, model.n);
  traj.states.push_back(x);
  for (int t = 0; t < T; ++t) {
    StepModel step = model.at(t);
    Vector zeta = model.sqrt_r(t) * normal_draws(streams.seed, streams.truth_meas, t, 0, model.m);
    traj.observations.push_back(step.H * x + zeta);
    Vector xi = model.sqrt_q(t) * normal_draws(streams.seed, streams.truth_process, t, 0, model.n);
    x = step.A * x + xi;
    traj.states.push_back(x);
  }
  return traj;
}

std::pair<Vector, Vector> draw_copies(const NoiseStreams& streams, const SystemModel& model,
                                      uint64_t member, int t) {
  Vector xi = model.sqrt_q(t) * normal_draws(streams.seed, streams.copy_process, t, member, model.n);
  Vector zeta = model.sqrt_r(t) * normal_draws(streams.seed, streams.copy_meas, t, member, model.m);
  return {std::move(xi), std::move(zeta)};
}

Vector draw_copy_x0(const NoiseStreams& streams, const SystemModel& model, uint64_t member) {
  if (!model.checked) throw ValidationError("draw_copy_x0 requires a validated model");
  return model.m0 +
         model.sqrt_Sigma0 * normal_draws(streams.seed, streams.copy_init, 0, member, model.n);
}

NoiseCopies draw_all_copies(const SystemModel& model, int T, const NoiseStreams& streams,
                            uint64_t member) {
  NoiseCopies copies;
  copies.x0 = draw_copy_x0(streams, model, member);
  copies.xi.reserve(static_cast<size_t>(T));
  copies.zeta.reserve(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    auto [xi, zeta] = draw_copies(streams, model, member, t);
    copies.xi.push_back(std::move(xi));
    copies.zeta.push_back(std::move(zeta));
  }
  return copies;
}

}  // namespace enkf
