#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "enkf/ensemble.hpp"

namespace enkf {

enum class RecordFormat { csv, jsonl };

// Fully validated experiment description. Variant grids are expanded at load
// time; every field is checked before any run starts.
struct Scenario {
  SystemModel model;
  std::string model_name;
  int T = 0;
  std::vector<int> N_list;
  std::vector<VariantSpec> variants;
  bool gamma_grid = false;  // variants came from a gamma grid
  uint64_t seed = 0;
  int replicates = 1;
  InitMode init = InitMode::random;
  std::string out_path;
  RecordFormat format = RecordFormat::csv;
};

// Named fixtures. scalar_benchmark: A=H=Sigma0=R=1, Q=0, m0=0.
SystemModel scalar_benchmark();

// random_stable: random A rescaled to spectral radius rho, random full-rank
// H, Q = q I, R = r I, m0 = 0, Sigma0 = I; keyed by gen_seed.
SystemModel random_stable(int n, int m, double rho, double q, double r, uint64_t gen_seed);

Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

RecordFormat format_from_string(const std::string& name);

}  // namespace enkf
