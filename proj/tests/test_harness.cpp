#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "enkf/errors.hpp"
#include "enkf/experiment.hpp"

using namespace enkf;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "enkf_harness_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  fs::path p = work_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  out.close();
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario scalar_scenario(uint64_t seed, int T, SolverKind solver, GammaPair g, int N,
                         int replicates = 1, InitMode init = InitMode::random) {
  Scenario sc;
  sc.model = scalar_benchmark();
  sc.model_name = "scalar_benchmark";
  sc.T = T;
  sc.N_list = {N};
  VariantSpec v;
  v.solver = solver;
  v.gammas = g;
  sc.variants = {v};
  sc.seed = seed;
  sc.replicates = replicates;
  sc.init = init;
  return sc;
}

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"enkf"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  argv.reserve(owned.size());
  for (auto& s : owned) argv.push_back(s.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("named model fixtures") {
  SystemModel scalar = scalar_benchmark();
  CHECK(scalar.n == 1);
  CHECK(scalar.m == 1);
  CHECK(scalar.A[0](0, 0) == 1.0);
  CHECK(scalar.Q[0](0, 0) == 0.0);
  CHECK(scalar.Sigma0(0, 0) == 1.0);

  SystemModel rnd = random_stable(4, 2, 0.95, 0.1, 1.0, 7);
  CHECK(rnd.n == 4);
  CHECK(rnd.m == 2);
  CHECK(rnd.A[0].eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(0.95).epsilon(1e-12));
  CHECK((rnd.Q[0] - 0.1 * Matrix::Identity(4, 4)).norm() == 0.0);
  CHECK((rnd.R[0] - Matrix::Identity(2, 2)).norm() == 0.0);
  CHECK(rnd.checked);

  SystemModel again = random_stable(4, 2, 0.95, 0.1, 1.0, 7);
  CHECK((rnd.A[0] - again.A[0]).norm() == 0.0);
  SystemModel other = random_stable(4, 2, 0.95, 0.1, 1.0, 8);
  CHECK((rnd.A[0] - other.A[0]).norm() > 0.0);
}

TEST_CASE("scenario parsing: defaults, grids, and validation") {
  nlohmann::json j = {
      {"seed", 11},
      {"T", 5},
      {"model", {{"generator", "scalar_benchmark"}}},
      {"N", 10},
      {"variant", {{"solver", "stochastic"}}},
  };
  Scenario sc = scenario_from_json(j);
  CHECK(sc.T == 5);
  CHECK(sc.replicates == 1);
  CHECK(sc.N_list == std::vector<int>{10});
  CHECK(sc.variants.size() == 1);
  CHECK(sc.variants[0].gammas.gamma1 == 1.0);  // solver default
  CHECK(sc.variants[0].gammas.gamma2 == 1.0);
  CHECK(sc.variants[0].gain_source == GainSource::oracle);
  CHECK(sc.init == InitMode::random);
  CHECK(sc.format == RecordFormat::csv);
  CHECK_FALSE(sc.gamma_grid);

  j["gamma_grid"] = {{"gamma1", {0.0, 0.5, 1.0}}, {"gamma2", {0.0, 0.5, 1.0}}};
  j.erase("variant");
  Scenario grid = scenario_from_json(j);
  CHECK(grid.gamma_grid);
  CHECK(grid.variants.size() == 9);
  CHECK(grid.variants[0].solver == SolverKind::sqrt_general);
  CHECK(grid.variants[1].gammas.gamma1 == 0.0);  // gamma1 outer, gamma2 inner
  CHECK(grid.variants[1].gammas.gamma2 == 0.5);
  CHECK(grid.variants[3].gammas.gamma1 == 0.5);

  nlohmann::json bad = j;
  bad["variant"] = {{"solver", "stochastic"}};
  CHECK_THROWS_AS(scenario_from_json(bad), ValidationError);
}

TEST_CASE("scenario parsing: explicit models and error messages") {
  nlohmann::json j = {
      {"seed", 1},
      {"T", 2},
      {"model",
       {{"A", {{0.5}}}, {"H", {{1.0}}}, {"Q", {{0.1}}}, {"m0", {0.0}}, {"Sigma0", {{1.0}}}}},
      {"N", 4},
      {"variant", {{"solver", "sqrt_general"}}},
  };
  try {
    scenario_from_json(j);
    FAIL("expected a missing-field error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("model.R") != std::string::npos);
  }
  j["model"]["R"] = {{2.0}};
  Scenario sc = scenario_from_json(j);
  CHECK(sc.model.R[0](0, 0) == 2.0);

  // Per-step sequences parse as lists of matrices.
  j["model"]["A"] = {{{0.5}}, {{0.8}}};
  Scenario tv = scenario_from_json(j);
  CHECK(tv.model.A.size() == 2);
  CHECK(tv.model.at(1).A(0, 0) == 0.8);
}

TEST_CASE("scenario parsing: remaining guards") {
  nlohmann::json base = {
      {"seed", 1},
      {"T", 3},
      {"model", {{"generator", "scalar_benchmark"}}},
      {"N", 6},
      {"variant", {{"solver", "sqrt_general"}}},
  };
  nlohmann::json j = base;
  j["T"] = 0;
  CHECK_THROWS_AS(scenario_from_json(j), ValidationError);
  j = base;
  j["variant"]["gamma1"] = 1.5;
  CHECK_THROWS_AS(scenario_from_json(j), ValidationError);
  j = base;
  j["variant"] = {{"solver", "etkf"}};
  Scenario sc = scenario_from_json(j);
  CHECK(sc.variants[0].application == Application::subspace);
  j = base;
  j["model"] = {{"generator", "random_stable"}, {"n", 3}, {"m", 1}, {"rho", 0.9}};
  j["init"] = "deterministic";
  j["N"] = 3;  // deterministic start needs N >= n+1
  CHECK_THROWS_AS(scenario_from_json(j), ValidationError);
  j["N"] = 4;
  CHECK_NOTHROW(scenario_from_json(j));
  j = base;
  j["replicates"] = 0;
  CHECK_THROWS_AS(scenario_from_json(j), ValidationError);
  CHECK_THROWS_AS(format_from_string("xml"), ValidationError);
}

TEST_CASE("load_scenario maps filesystem and syntax problems to exit classes") {
  CHECK_THROWS_AS(load_scenario(work_dir() / "missing.json"), IoError);
  std::string bad = write_file("bad.json", "{ not json");
  CHECK_THROWS_AS(load_scenario(bad), ParseError);
  std::string good = write_file("good.json", R"({
    "seed": 2, "T": 3,
    "model": {"generator": "scalar_benchmark"},
    "N": 5,
    "variant": {"solver": "denkf"}
  })");
  Scenario sc = load_scenario(good);
  CHECK(sc.variants[0].solver == SolverKind::denkf);
  CHECK(sc.variants[0].gammas.gamma1 == 1.0);
  CHECK(sc.variants[0].gammas.gamma2 == 0.0);
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 2.0, 1e-300, 6.02e23, -0.25, 0.0}) {
    std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("record serialization round-trips in both formats") {
  std::vector<RunRecord> rows(2);
  rows[0].run_id = 0;
  rows[0].t = 0;
  rows[0].variant = "stochastic";
  rows[0].gamma1 = 1.0;
  rows[0].gamma2 = 1.0;
  rows[0].N = 10;
  rows[0].seed = 18446744073709551615ull;  // uint64 max survives the trip
  rows[0].mean_err = 0.1;
  rows[0].cov_err = 1.0 / 3.0;
  rows[0].ct_residual = 1e-17;
  rows[0].rhs_residual = 0.0;
  rows[0].rmse_truth = 2.5;
  rows[1] = rows[0];
  rows[1].run_id = 1;
  rows[1].t = 1;
  rows[1].variant = "etkf";

  for (RecordFormat fmt : {RecordFormat::csv, RecordFormat::jsonl}) {
    std::string name = fmt == RecordFormat::csv ? "round.csv" : "round.jsonl";
    fs::path p = work_dir() / name;
    write_records(rows, p.string(), fmt);
    std::vector<RunRecord> back = read_records(p.string());
    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].run_id == rows[i].run_id);
      CHECK(back[i].t == rows[i].t);
      CHECK(back[i].variant == rows[i].variant);
      CHECK(back[i].N == rows[i].N);
      CHECK(back[i].seed == rows[i].seed);
      CHECK(back[i].mean_err == rows[i].mean_err);
      CHECK(back[i].cov_err == rows[i].cov_err);
      CHECK(back[i].ct_residual == rows[i].ct_residual);
      CHECK(back[i].rmse_truth == rows[i].rmse_truth);
    }
  }

  std::string csv = records_to_string(rows, RecordFormat::csv);
  CHECK(csv.rfind("run_id,t,variant,gamma1,gamma2,N,seed,mean_err,cov_err,ct_residual,"
                  "rhs_residual,rmse_truth\n", 0) == 0);
  std::string jsonl = records_to_string(rows, RecordFormat::jsonl);
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 2);
}

TEST_CASE("write_records drops a companion plot script beside the data") {
  std::vector<RunRecord> rows(1);
  rows[0].variant = "stochastic";
  fs::path p = work_dir() / "plotme.csv";
  write_records(rows, p.string(), RecordFormat::csv);
  fs::path script = work_dir() / "plotme_plot.py";
  REQUIRE(fs::exists(script));
  std::string body = slurp(script.string());
  CHECK(body.find("plotme.csv") != std::string::npos);
  CHECK(body.find("matplotlib") != std::string::npos);
}

TEST_CASE("empty record sets still serialize a header") {
  std::string csv = records_to_string({}, RecordFormat::csv);
  CHECK(csv == "run_id,t,variant,gamma1,gamma2,N,seed,mean_err,cov_err,ct_residual,"
               "rhs_residual,rmse_truth\n");
  CHECK(records_to_string({}, RecordFormat::jsonl).empty());
}

TEST_CASE("run_experiment: deterministic silent runs sit on the exact filter") {
  Scenario sc;
  sc.model = random_stable(3, 1, 0.9, 0.1, 1.0, 21);
  sc.T = 15;
  sc.N_list = {6};
  VariantSpec v;  // sqrt_general (0,0) oracle
  sc.variants = {v};
  sc.seed = 77;
  sc.init = InitMode::deterministic;
  ExperimentResult res = run_experiment(sc);
  CHECK(res.failures.empty());
  REQUIRE(res.records.size() == 16);
  for (const auto& r : res.records) {
    CHECK(r.mean_err < 1e-10);
    CHECK(r.cov_err < 1e-9);
    CHECK(r.N == 6);
    CHECK(r.variant == "sqrt_general");
    CHECK(r.seed == derive_replicate_seed(77, 0));
  }
  CHECK(res.records[0].t == 0);
  CHECK(res.records[0].ct_residual == 0.0);
  CHECK(res.records[0].rhs_residual == 0.0);
  CHECK(res.oracle.truth.states.size() == 16);
  CHECK(res.oracle.kf.beliefs.size() == 16);
}

TEST_CASE("run_experiment: replicates are keyed independently yet share the truth") {
  Scenario sc = scalar_scenario(5, 4, SolverKind::stochastic, {1.0, 1.0}, 8, 3);
  ExperimentResult res = run_experiment(sc);
  REQUIRE(res.records.size() == 15);  // 3 replicates x (T+1)
  CHECK(res.records[0].run_id == 0);
  CHECK(res.records[5].run_id == 1);
  CHECK(res.records[0].seed != res.records[5].seed);
  // Different copies, same truth: rmse at t=0 differs across replicates.
  CHECK(res.records[0].rmse_truth != res.records[5].rmse_truth);
  ExperimentResult again = run_experiment(sc);
  CHECK(records_to_string(res.records, RecordFormat::csv) ==
        records_to_string(again.records, RecordFormat::csv));
}

TEST_CASE("run_experiment: per-run failures are reported, not fatal") {
  Scenario sc;
  sc.model = random_stable(3, 1, 0.9, 0.1, 1.0, 22);
  sc.T = 3;
  sc.N_list = {3, 6};  // N=3 cannot seed a deterministic 3-dimensional start
  VariantSpec v;
  sc.variants = {v};
  sc.seed = 9;
  sc.init = InitMode::deterministic;
  ExperimentResult res = run_experiment(sc);
  REQUIRE(res.failures.size() == 1);
  CHECK(res.failures[0].find("N=3") != std::string::npos);
  CHECK(res.records.size() == 4);  // only the N=6 run produced rows
  for (const auto& r : res.records) CHECK(r.N == 6);
}

TEST_CASE("run_experiment: an unusable exact filter aborts loudly") {
  Scenario sc;
  Matrix A = Matrix::Identity(2, 2);
  Matrix R(2, 2);
  R << 1.0, 0.0, 0.0, 1e-15;
  sc.model = validate_model(
      make_model(A, A, Matrix::Zero(2, 2), R, Vector::Zero(2), Matrix::Zero(2, 2)));
  sc.T = 2;
  sc.N_list = {4};
  sc.variants = {VariantSpec{}};
  sc.seed = 1;
  CHECK_THROWS_AS(run_experiment(sc), NumericError);
}

TEST_CASE("sweep_gamma covers the grid and matches the closed form at (1,1)") {
  Scenario grid = scalar_scenario(31, 6, SolverKind::sqrt_general, {1.0, 1.0}, 12);
  grid.variants.clear();
  for (double g1 : {0.0, 0.5, 1.0}) {
    for (double g2 : {0.0, 0.5, 1.0}) {
      VariantSpec v;
      v.solver = SolverKind::sqrt_general;
      v.gammas = {g1, g2};
      grid.variants.push_back(v);
    }
  }
  grid.gamma_grid = true;
  SweepResult sweep = sweep_gamma(grid);
  CHECK(sweep.infeasible.empty());
  CHECK(sweep.records.size() == 9 * 7);

  Scenario closed = scalar_scenario(31, 6, SolverKind::stochastic, {1.0, 1.0}, 12);
  ExperimentResult direct = run_experiment(closed);
  // The (1,1) square-root point and the closed-form update share each
  // sample-mean trajectory; mean errors agree to rounding.
  for (const auto& r : sweep.records) {
    if (r.gamma1 != 1.0 || r.gamma2 != 1.0) continue;
    bool found = false;
    for (const auto& d : direct.records) {
      if (d.t == r.t) {
        CHECK(std::abs(d.mean_err - r.mean_err) < 1e-10);
        found = true;
      }
    }
    CHECK(found);
  }

  Scenario wrong = scalar_scenario(31, 6, SolverKind::stochastic, {1.0, 1.0}, 12);
  CHECK_THROWS_AS(sweep_gamma(wrong), ValidationError);
}

TEST_CASE("convergence_study recovers the sampling rate and guards its inputs") {
  Scenario sc = scalar_scenario(8, 5, SolverKind::stochastic, {1.0, 1.0}, 10);
  std::ostringstream warn;
  ConvergenceResult res = convergence_study(sc, {10, 100, 1000}, 100, &warn);
  CHECK(warn.str().empty());
  CHECK(res.rms_final.size() == 3);
  CHECK(res.rms_final[0] > res.rms_final[2]);
  CHECK(res.slope < -0.2);
  CHECK(res.slope > -0.8);

  CHECK_THROWS_AS(convergence_study(sc, {10, 100}, 10, nullptr), ValidationError);
  CHECK_THROWS_AS(convergence_study(sc, {10, 100, 100}, 10, nullptr), ValidationError);

  std::ostringstream warn2;
  ConvergenceResult single = convergence_study(sc, {10, 20, 40}, 1, &warn2);
  CHECK(!warn2.str().empty());
  CHECK(single.rms_final.size() == 3);

  Scenario exact = scalar_scenario(8, 5, SolverKind::sqrt_general, {0.0, 0.0}, 0,
                                   1, InitMode::deterministic);
  exact.N_list = {4, 6, 8};
  CHECK_THROWS_AS(convergence_study(exact, {4, 6, 8}, 2, nullptr), FlooredError);
}

TEST_CASE("verify_suite passes on the scalar fixture and is deterministic") {
  Scenario sc = scalar_scenario(42, 10, SolverKind::stochastic, {1.0, 1.0}, 10);
  std::vector<CheckResult> checks = verify_suite(sc);
  REQUIRE(checks.size() >= 9);
  for (const auto& c : checks) {
    INFO(c.name, ": ", c.note);
    CHECK(c.pass);
  }
  std::vector<CheckResult> again = verify_suite(sc);
  REQUIRE(again.size() == checks.size());
  for (size_t i = 0; i < checks.size(); ++i) {
    CHECK(checks[i].name == again[i].name);
    CHECK(checks[i].measured == again[i].measured);
  }
}

TEST_CASE("verify_suite reports an unusable exact filter as a failed check") {
  Scenario sc;
  Matrix A = Matrix::Identity(2, 2);
  Matrix R(2, 2);
  R << 1.0, 0.0, 0.0, 1e-15;
  sc.model = validate_model(
      make_model(A, A, Matrix::Zero(2, 2), R, Vector::Zero(2), Matrix::Zero(2, 2)));
  sc.T = 3;
  sc.N_list = {4};
  sc.variants = {VariantSpec{}};
  sc.seed = 2;
  std::vector<CheckResult> checks = verify_suite(sc);
  REQUIRE(checks.size() == 1);
  CHECK(checks[0].name == "exact_filter_run");
  CHECK_FALSE(checks[0].pass);
  CHECK(!checks[0].note.empty());
}

TEST_CASE("command line: exit codes for the failure classes") {
  CHECK(run_cli({"verify", "--scenario", (work_dir() / "nope.json").string()}) == 3);
  std::string bad = write_file("cli_bad.json", "{");
  CHECK(run_cli({"verify", "--scenario", bad}) == 1);
  std::string invalid = write_file("cli_invalid.json", R"({
    "seed": 1, "T": 3,
    "model": {"generator": "scalar_benchmark"},
    "N": 5,
    "variant": {"solver": "stochastic", "gamma1": 0.5}
  })");
  CHECK(run_cli({"verify", "--scenario", invalid}) == 1);
  CHECK(run_cli({"frobnicate"}) == 1);
  CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("command line: filter writes identical bytes for identical scenarios") {
  std::string scenario = write_file("cli_repeat.json", R"({
    "seed": 19, "T": 4,
    "model": {"generator": "scalar_benchmark"},
    "N": 7,
    "variant": {"solver": "stochastic"},
    "replicates": 2
  })");
  fs::path out_a = work_dir() / "cli_a.csv";
  fs::path out_b = work_dir() / "cli_b.csv";
  CHECK(run_cli({"filter", "--scenario", scenario, "--quiet", "--out", out_a.string()}) == 0);
  CHECK(run_cli({"filter", "--scenario", scenario, "--quiet", "--out", out_b.string()}) == 0);
  std::string a = slurp(out_a.string());
  CHECK(!a.empty());
  CHECK(a == slurp(out_b.string()));
  // A different seed produces different bytes.
  fs::path out_c = work_dir() / "cli_c.csv";
  CHECK(run_cli({"filter", "--scenario", scenario, "--quiet", "--seed", "20", "--out",
                 out_c.string()}) == 0);
  CHECK(a != slurp(out_c.string()));
}

TEST_CASE("command line: verify and report succeed on a written records file") {
  std::string scenario = write_file("cli_ok.json", R"({
    "seed": 3, "T": 4,
    "model": {"generator": "scalar_benchmark"},
    "N": 6,
    "variant": {"solver": "denkf"}
  })");
  CHECK(run_cli({"verify", "--scenario", scenario}) == 0);
  fs::path out = work_dir() / "cli_records.csv";
  CHECK(run_cli({"filter", "--scenario", scenario, "--quiet", "--out", out.string()}) == 0);
  CHECK(run_cli({"report", out.string()}) == 0);
  CHECK(run_cli({"report", (work_dir() / "cli_missing.csv").string()}) == 3);
}

TEST_CASE("command line: a filter scenario with grids is redirected to sweep") {
  std::string scenario = write_file("cli_grid.json", R"({
    "seed": 3, "T": 3,
    "model": {"generator": "scalar_benchmark"},
    "N": 6,
    "gamma_grid": {"gamma1": [0, 1], "gamma2": [0, 1]}
  })");
  CHECK(run_cli({"filter", "--scenario", scenario, "--quiet"}) == 1);
  fs::path out = work_dir() / "cli_grid.csv";
  CHECK(run_cli({"sweep", "--scenario", scenario, "--quiet", "--out", out.string()}) == 0);
  std::vector<RunRecord> rows = read_records(out.string());
  CHECK(rows.size() == 4 * 4);
}
