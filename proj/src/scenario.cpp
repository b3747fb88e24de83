#include "enkf/scenario.hpp"

#include <fstream>

#include "enkf/errors.hpp"

namespace enkf {

namespace {

using nlohmann::json;

[[noreturn]] void missing(const std::string& field) {
  throw ValidationError(field + ": required");
}

const json& get(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) missing(where.empty() ? key : where + "." + key);
  return *it;
}

Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ValidationError(field + ": expected a matrix (array of rows)");
  size_t rows = j.size(), cols = j[0].size();
  Matrix M(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ValidationError(field + ": ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ValidationError(field + ": non-numeric entry");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

// Accepts a matrix or a list of matrices (per-step sequence).
std::vector<Matrix> parse_matrix_seq(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ValidationError(field + ": expected a matrix");
  if (j[0].is_array() && !j[0].empty() && j[0][0].is_array()) {
    std::vector<Matrix> seq;
    for (size_t i = 0; i < j.size(); ++i)
      seq.push_back(parse_matrix(j[i], field + "[" + std::to_string(i) + "]"));
    return seq;
  }
  return {parse_matrix(j, field)};
}

Vector parse_vector(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field + ": expected an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(field + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

SystemModel parse_model(const json& j, uint64_t default_gen_seed) {
  if (!j.is_object()) throw ValidationError("model: expected an object");
  if (j.contains("generator")) {
    std::string name = j["generator"].get<std::string>();
    if (name == "scalar_benchmark") return scalar_benchmark();
    if (name == "random_stable") {
      int n = get(j, "n", "model").get<int>();
      int m = get(j, "m", "model").get<int>();
      double rho = get(j, "rho", "model").get<double>();
      double q = j.value("q", 0.1);
      double r = j.value("r", 1.0);
      uint64_t gen_seed = j.contains("gen_seed") ? j["gen_seed"].get<uint64_t>() : default_gen_seed;
      return random_stable(n, m, rho, q, r, gen_seed);
    }
    throw ValidationError("model.generator: unknown generator '" + name + "'");
  }
  SystemModel model;
  model.A = parse_matrix_seq(get(j, "A", "model"), "model.A");
  model.H = parse_matrix_seq(get(j, "H", "model"), "model.H");
  model.Q = parse_matrix_seq(get(j, "Q", "model"), "model.Q");
  model.R = parse_matrix_seq(get(j, "R", "model"), "model.R");
  model.m0 = parse_vector(get(j, "m0", "model"), "model.m0");
  model.Sigma0 = parse_matrix(get(j, "Sigma0", "model"), "model.Sigma0");
  model.n = static_cast<int>(model.A[0].rows());
  model.m = static_cast<int>(model.H[0].rows());
  return validate_model(std::move(model));
}

GammaPair parse_gammas(const json& j, SolverKind solver) {
  GammaPair def{0.0, 0.0};
  if (solver == SolverKind::stochastic) def = {1.0, 1.0};
  if (solver == SolverKind::denkf || solver == SolverKind::ensrf_scalar) def = {1.0, 0.0};
  GammaPair g;
  g.gamma1 = j.contains("gamma1") ? j["gamma1"].get<double>() : def.gamma1;
  g.gamma2 = j.contains("gamma2") ? j["gamma2"].get<double>() : def.gamma2;
  return g;
}

VariantSpec parse_variant_base(const json& j, const std::string& where) {
  VariantSpec spec;
  spec.solver = solver_from_string(get(j, "solver", where).get<std::string>());
  std::string src = j.value("gain_source", "oracle");
  if (src == "oracle")
    spec.gain_source = GainSource::oracle;
  else if (src == "ensemble")
    spec.gain_source = GainSource::ensemble;
  else
    throw ValidationError(where + ".gain_source: expected oracle|ensemble");
  std::string app = j.value("application",
                            spec.solver == SolverKind::etkf ? "subspace" : "state_space");
  if (app == "state_space")
    spec.application = Application::state_space;
  else if (app == "subspace")
    spec.application = Application::subspace;
  else
    throw ValidationError(where + ".application: expected state_space|subspace");
  return spec;
}

}  // namespace

SystemModel scalar_benchmark() {
  Matrix one = Matrix::Ones(1, 1);
  return validate_model(make_model(one, one, Matrix::Zero(1, 1), one, Vector::Zero(1), one));
}

SystemModel random_stable(int n, int m, double rho, double q, double r, uint64_t gen_seed) {
  if (n < 1 || m < 1) throw ValidationError("random_stable: dimensions must be positive");
  if (rho <= 0.0) throw ValidationError("random_stable: rho must be positive");
  NoiseStreams ids;
  Matrix A(n, n), H(m, n);
  Vector a_entries = normal_draws(gen_seed, ids.model_gen, 0, 0, n * n);
  Vector h_entries = normal_draws(gen_seed, ids.model_gen, 1, 0, m * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = a_entries[i * n + j];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) H(i, j) = h_entries[i * n + j];
  double radius = A.eigenvalues().cwiseAbs().maxCoeff();
  if (radius < 1e-8) throw NumericError("random_stable: drew a near-nilpotent A");
  A *= rho / radius;
  Eigen::JacobiSVD<Matrix> svd(H);
  if (svd.singularValues().minCoeff() < 1e-8 * svd.singularValues().maxCoeff())
    throw NumericError("random_stable: drew a rank-deficient H");
  return validate_model(make_model(std::move(A), std::move(H), q * Matrix::Identity(n, n),
                                   r * Matrix::Identity(m, m), Vector::Zero(n),
                                   Matrix::Identity(n, n)));
}

RecordFormat format_from_string(const std::string& name) {
  if (name == "csv") return RecordFormat::csv;
  if (name == "jsonl") return RecordFormat::jsonl;
  throw ValidationError("format: expected csv|jsonl, got '" + name + "'");
}

Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scenario: expected a JSON object");
  Scenario sc;
  sc.seed = get(j, "seed", "").get<uint64_t>();
  sc.T = get(j, "T", "").get<int>();
  if (sc.T < 1) throw ValidationError("T: must be >= 1");

  const json& jm = get(j, "model", "");
  sc.model = parse_model(jm, sc.seed);
  sc.model_name = jm.contains("generator") ? jm["generator"].get<std::string>() : "explicit";

  const json& jn = get(j, "N", "");
  if (jn.is_array()) {
    for (const auto& v : jn) sc.N_list.push_back(v.get<int>());
  } else {
    sc.N_list.push_back(jn.get<int>());
  }
  if (sc.N_list.empty()) throw ValidationError("N: must not be empty");

  sc.replicates = j.value("replicates", 1);
  if (sc.replicates < 1) throw ValidationError("replicates: must be >= 1");
  std::string init = j.value("init", "random");
  if (init == "random")
    sc.init = InitMode::random;
  else if (init == "deterministic")
    sc.init = InitMode::deterministic;
  else
    throw ValidationError("init: expected random|deterministic");
  sc.out_path = j.value("out", "");
  sc.format = format_from_string(j.value("format", "csv"));

  if (j.contains("gamma_grid")) {
    if (j.contains("variant"))
      throw ValidationError("scenario: give either variant or gamma_grid, not both");
    json jg = j["gamma_grid"];
    if (!jg.contains("solver")) jg["solver"] = "sqrt_general";
    VariantSpec base = parse_variant_base(jg, "gamma_grid");
    if (base.solver != SolverKind::sqrt_general)
      throw ValidationError("gamma_grid: only sqrt_general is valid across a gamma grid");
    const json& g1 = get(jg, "gamma1", "gamma_grid");
    const json& g2 = get(jg, "gamma2", "gamma_grid");
    if (!g1.is_array() || !g2.is_array())
      throw ValidationError("gamma_grid: gamma1 and gamma2 must be arrays");
    for (const auto& a : g1) {
      for (const auto& b : g2) {
        VariantSpec v = base;
        v.gammas = {a.get<double>(), b.get<double>()};
        sc.variants.push_back(v);
      }
    }
    sc.gamma_grid = true;
  } else {
    const json& jv = get(j, "variant", "");
    VariantSpec v = parse_variant_base(jv, "variant");
    v.gammas = parse_gammas(jv, v.solver);
    sc.variants.push_back(v);
  }

  for (const auto& v : sc.variants) validate_variant_for_model(v, sc.model);
  int min_N = sc.init == InitMode::deterministic ? sc.model.n + 1 : 2;
  for (int N : sc.N_list)
    if (N < min_N) throw EnsembleTooSmall(N, min_N);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("scenario '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace enkf
