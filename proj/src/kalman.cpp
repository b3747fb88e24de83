#include "enkf/kalman.hpp"

#include <limits>
#include <string>

#include "enkf/errors.hpp"

namespace enkf {

Matrix innovation_solve(const Matrix& S, const Matrix& B) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  const Vector& lam = es.eigenvalues();
  double lo = lam.minCoeff();
  double hi = lam.maxCoeff();
  if (lo <= 0.0 || hi / lo > kInnovCondLimit)
    throw SingularInnovation(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
  return es.eigenvectors() * lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose() * B;
}

Matrix kalman_gain(const Matrix& Sigma, const StepModel& step) {
  Matrix S = step.H * Sigma * step.H.transpose() + step.R;
  // K = Sigma H^T S^{-1} = (S^{-1} H Sigma)^T since Sigma and S are symmetric.
  return innovation_solve(S, step.H * symmetrize(Sigma)).transpose();
}

Matrix riccati_step(const Matrix& Sigma, const StepModel& step) {
  Matrix Sym = symmetrize(Sigma);
  Matrix S = step.H * Sym * step.H.transpose() + step.R;
  Matrix G = step.A * Sym * step.H.transpose();
  Matrix next = step.A * Sym * step.A.transpose() + step.Q -
                G * innovation_solve(S, G.transpose());
  return symmetrize(next);
}

Vector kf_mean_step(const GaussianBelief& belief, const Vector& z, const StepModel& step) {
  Matrix K = kalman_gain(belief.cov, step);
  return step.A * (belief.mean + K * (z - step.H * belief.mean));
}

KfResult run_kf(const SystemModel& model, const std::vector<Vector>& observations) {
  if (!model.checked) throw ValidationError("run_kf requires a validated model");
  const int T = static_cast<int>(observations.size());
  KfResult out;
  out.beliefs.reserve(static_cast<size_t>(T) + 1);
  out.schedule.gains.reserve(static_cast<size_t>(T));
  out.schedule.covs.reserve(static_cast<size_t>(T) + 1);

  GaussianBelief belief{model.m0, symmetrize(model.Sigma0)};
  out.beliefs.push_back(belief);
  out.schedule.covs.push_back(belief.cov);
  for (int t = 0; t < T; ++t) {
    StepModel step = model.at(t);
    try {
      Matrix K = kalman_gain(belief.cov, step);
      belief.mean = step.A * (belief.mean + K * (observations[t] - step.H * belief.mean));
      belief.cov = riccati_step(belief.cov, step);
      double lam = min_eigenvalue(belief.cov);
      if (lam < -kPsdTol * std::max(1.0, belief.cov.norm()))
        throw NumericError("covariance lost positive semidefiniteness (min eigenvalue " +
                           std::to_string(lam) + ")");
      out.schedule.gains.push_back(std::move(K));
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(t));
    }
    out.beliefs.push_back(belief);
    out.schedule.covs.push_back(belief.cov);
  }
  return out;
}

}  // namespace enkf
