#include "enkf/variants.hpp"

#include <cmath>

#include "enkf/errors.hpp"

namespace enkf {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::stochastic: return "stochastic";
    case SolverKind::denkf: return "denkf";
    case SolverKind::ensrf_scalar: return "ensrf_scalar";
    case SolverKind::sqrt_general: return "sqrt_general";
    case SolverKind::eakf_svd: return "eakf_svd";
    case SolverKind::etkf: return "etkf";
  }
  return "unknown";
}

SolverKind solver_from_string(const std::string& name) {
  if (name == "stochastic") return SolverKind::stochastic;
  if (name == "denkf") return SolverKind::denkf;
  if (name == "ensrf_scalar") return SolverKind::ensrf_scalar;
  if (name == "sqrt_general") return SolverKind::sqrt_general;
  if (name == "eakf_svd") return SolverKind::eakf_svd;
  if (name == "etkf") return SolverKind::etkf;
  throw ValidationError("unknown solver '" + name + "'");
}

void validate_variant(const VariantSpec& spec) {
  const auto [g1, g2] = spec.gammas;
  if (!std::isfinite(g1) || !std::isfinite(g2) || g1 < 0.0 || g1 > 1.0 || g2 < 0.0 || g2 > 1.0)
    throw ValidationError("gammas must lie in [0,1]^2, got (" + std::to_string(g1) + ", " +
                          std::to_string(g2) + ")");
  auto pins = [&](double w1, double w2, const char* tag) {
    if (g1 != w1 || g2 != w2)
      throw ValidationError(std::string(tag) + " requires gammas (" + std::to_string(w1) + ", " +
                            std::to_string(w2) + ")");
  };
  if (spec.solver == SolverKind::stochastic) pins(1.0, 1.0, "stochastic");
  if (spec.solver == SolverKind::denkf) pins(1.0, 0.0, "denkf");
  if (spec.solver == SolverKind::ensrf_scalar) pins(1.0, 0.0, "ensrf_scalar");
  bool is_etkf = spec.solver == SolverKind::etkf;
  bool is_subspace = spec.application == Application::subspace;
  if (is_etkf != is_subspace)
    throw ValidationError("etkf and subspace application imply each other");
}

void validate_variant_for_model(const VariantSpec& spec, const SystemModel& model) {
  validate_variant(spec);
  if (spec.solver != SolverKind::ensrf_scalar || model.m == 1) return;
  for (const auto& R : model.R) {
    Matrix off = R - Matrix(R.diagonal().asDiagonal());
    if (off.norm() > kPsdTol * std::max(1.0, R.norm()))
      throw ValidationError("ensrf_scalar with m > 1 requires a diagonal R");
  }
}

}  // namespace enkf
