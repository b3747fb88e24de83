#pragma once

#include <string>

#include "enkf/model.hpp"

namespace enkf {

// Noise-copy scalings. (1,1) injects full process and measurement copies,
// (0,0) injects none; intermediate values interpolate the family.
struct GammaPair {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

enum class SolverKind { stochastic, denkf, ensrf_scalar, sqrt_general, eakf_svd, etkf };
enum class GainSource { oracle, ensemble };
enum class Application { state_space, subspace };

std::string to_string(SolverKind kind);
SolverKind solver_from_string(const std::string& name);

// One point in the filter family: gamma pair, anomaly-transform strategy,
// gain source, and whether the transform acts on states or on member weights.
struct VariantSpec {
  GammaPair gammas;
  SolverKind solver = SolverKind::sqrt_general;
  GainSource gain_source = GainSource::oracle;
  Application application = Application::state_space;
};

// Model-independent invariants: gammas in [0,1]^2; stochastic pins (1,1);
// denkf and ensrf_scalar pin (1,0); etkf and subspace application imply each
// other.
void validate_variant(const VariantSpec& spec);

// Model-dependent invariants: ensrf_scalar needs m == 1 or a diagonal R.
void validate_variant_for_model(const VariantSpec& spec, const SystemModel& model);

}  // namespace enkf
