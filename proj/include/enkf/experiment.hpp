#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "enkf/dual.hpp"
#include "enkf/records.hpp"

namespace enkf {

// Truth, observations and exact-filter run shared by every variant, ensemble
// size and replicate of one scenario.
struct OracleData {
  Trajectory truth;
  KfResult kf;
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<std::string> failures;  // one entry per aborted replicate
  OracleData oracle;
};

// Runs every (variant, N, replicate) combination. The truth and exact filter
// are computed once from the base seed; replicate r keys its copy streams by
// a seed derived from (seed, r). A failed replicate is recorded and skipped.
ExperimentResult run_experiment(const Scenario& scenario);

struct SweepResult {
  std::vector<RunRecord> records;
  std::vector<std::string> infeasible;  // grid points where no transform exists
};

// Grid sweep; requires the general square-root solver. Points where the
// transform target is indefinite are flagged as data, not treated as aborts.
SweepResult sweep_gamma(const Scenario& scenario);

struct ConvergenceResult {
  std::vector<RunRecord> records;
  std::vector<double> rms_final;  // per N: rms of mean_err at the final step
  double slope = 0.0;             // least-squares log-log slope
};

// Requires at least three ensemble sizes. Throws FlooredError when the final
// errors sit at the deterministic floor. warn (nullable) receives notes such
// as the single-replicate warning.
ConvergenceResult convergence_study(const Scenario& scenario, const std::vector<int>& N_list,
                                    int replicates, std::ostream* warn);

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

// Bundles the identity checks (dual optimality and value, decomposition grid,
// second-moment matching, batch vs recursive, solver residuals) against the
// scenario's model. Errors inside a check mark it failed instead of aborting.
std::vector<CheckResult> verify_suite(const Scenario& scenario);

int cli_main(int argc, char** argv);

}  // namespace enkf
