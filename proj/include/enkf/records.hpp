#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "enkf/scenario.hpp"

namespace enkf {

// One metrics row. mean_err and cov_err compare the ensemble to the exact
// filter; rmse_truth compares the ensemble mean to the realized truth state.
struct RunRecord {
  int64_t run_id = 0;
  int t = 0;
  std::string variant;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  int N = 0;
  uint64_t seed = 0;
  double mean_err = 0.0;
  double cov_err = 0.0;
  double ct_residual = 0.0;
  double rhs_residual = 0.0;
  double rmse_truth = 0.0;
};

// Shortest decimal string that round-trips the exact double.
std::string format_double(double v);

// CSV (fixed column order, header row) or JSON lines with the same field
// names. Also writes a companion plot script <stem>_plot.py next to the data.
void write_records(const std::vector<RunRecord>& records, const std::string& path,
                   RecordFormat format);

// Serialize records without touching the filesystem.
std::string records_to_string(const std::vector<RunRecord>& records, RecordFormat format);

// Inverse of write_records; the format is inferred from the content.
std::vector<RunRecord> read_records(const std::string& path);

}  // namespace enkf
