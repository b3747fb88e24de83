#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "enkf/errors.hpp"
#include "enkf/experiment.hpp"

namespace enkf {

namespace {

struct CommonOpts {
  std::string scenario_path;
  std::string out_path;
  std::string format_name;
  uint64_t seed = 0;
  int replicates = 1;
  bool quiet = false;
  CLI::Option* out_opt = nullptr;
  CLI::Option* fmt_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* rep_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--scenario", o.scenario_path, "scenario JSON file")->required();
  o.out_opt = cmd->add_option("--out", o.out_path, "output path (stdout when omitted)");
  o.fmt_opt = cmd->add_option("--format", o.format_name, "output format")
                  ->check(CLI::IsMember({"csv", "jsonl"}));
  o.seed_opt = cmd->add_option("--seed", o.seed, "override the scenario seed");
  o.rep_opt = cmd->add_option("--replicates", o.replicates, "override the replicate count")
                  ->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", o.quiet, "suppress diagnostics on stderr");
}

Scenario load_with_overrides(const CommonOpts& o) {
  Scenario sc = load_scenario(o.scenario_path);
  if (o.seed_opt->count() > 0) sc.seed = o.seed;
  if (o.rep_opt->count() > 0) sc.replicates = o.replicates;
  if (o.out_opt->count() > 0) sc.out_path = o.out_path;
  if (o.fmt_opt->count() > 0) sc.format = format_from_string(o.format_name);
  return sc;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

void emit_records(const std::vector<RunRecord>& records, const Scenario& sc, bool quiet) {
  if (sc.out_path.empty()) {
    std::cout << records_to_string(records, sc.format);
  } else {
    write_records(records, sc.out_path, sc.format);
    if (!quiet)
      std::cerr << "wrote " << records.size() << " rows to " << sc.out_path << "\n";
  }
}

int cmd_simulate(const CommonOpts& o) {
  Scenario sc = load_with_overrides(o);
  NoiseStreams streams;
  streams.seed = sc.seed;
  Trajectory truth = simulate_truth(sc.model, sc.T, streams);
  const int T = sc.T;
  std::string text;
  if (sc.format == RecordFormat::csv) {
    std::string header = "t";
    for (int i = 0; i < sc.model.n; ++i) header += ",x" + std::to_string(i);
    for (int i = 0; i < sc.model.m; ++i) header += ",z" + std::to_string(i);
    text = header + "\n";
    for (int t = 0; t <= T; ++t) {
      text += std::to_string(t);
      for (int i = 0; i < sc.model.n; ++i)
        text += "," + format_double(truth.states[static_cast<size_t>(t)](i));
      for (int i = 0; i < sc.model.m; ++i) {
        text += ",";
        if (t < T) text += format_double(truth.observations[static_cast<size_t>(t)](i));
      }
      text += "\n";
    }
  } else {
    for (int t = 0; t <= T; ++t) {
      nlohmann::ordered_json row;
      row["t"] = t;
      row["x"] = std::vector<double>(
          truth.states[static_cast<size_t>(t)].data(),
          truth.states[static_cast<size_t>(t)].data() + sc.model.n);
      if (t < T)
        row["z"] = std::vector<double>(
            truth.observations[static_cast<size_t>(t)].data(),
            truth.observations[static_cast<size_t>(t)].data() + sc.model.m);
      text += row.dump() + "\n";
    }
  }
  if (sc.out_path.empty()) {
    std::cout << text;
  } else {
    write_text(sc.out_path, text);
    if (!o.quiet)
      std::cerr << "wrote trajectory (T=" << T << ") to " << sc.out_path << "\n";
  }
  return 0;
}

int cmd_filter(const CommonOpts& o) {
  Scenario sc = load_with_overrides(o);
  if (sc.variants.size() != 1 || sc.N_list.size() != 1)
    throw ValidationError(
        "filter runs one variant at one ensemble size; use sweep for grids");
  ExperimentResult res = run_experiment(sc);
  emit_records(res.records, sc, o.quiet);
  for (const auto& f : res.failures) std::cerr << "failed: " << f << "\n";
  if (!res.failures.empty()) return 2;
  if (!o.quiet) {
    double rms = 0.0;
    int count = 0;
    for (const auto& r : res.records) {
      if (r.t != sc.T) continue;
      rms += r.mean_err * r.mean_err;
      ++count;
    }
    rms = std::sqrt(rms / std::max(count, 1));
    std::cerr << "variant " << to_string(sc.variants[0].solver) << ", N=" << sc.N_list[0]
              << ", replicates=" << sc.replicates
              << ": final mean_err rms = " << format_double(rms) << "\n";
  }
  return 0;
}

int cmd_sweep(const CommonOpts& o) {
  Scenario sc = load_with_overrides(o);
  if (sc.gamma_grid) {
    SweepResult res = sweep_gamma(sc);
    emit_records(res.records, sc, o.quiet);
    if (!o.quiet)
      for (const auto& f : res.infeasible) std::cerr << "infeasible: " << f << "\n";
    return 0;
  }
  if (sc.N_list.size() >= 3 && sc.variants.size() == 1) {
    ConvergenceResult res =
        convergence_study(sc, sc.N_list, sc.replicates, o.quiet ? nullptr : &std::cerr);
    emit_records(res.records, sc, o.quiet);
    if (!o.quiet) {
      for (size_t i = 0; i < sc.N_list.size(); ++i)
        std::cerr << "N=" << sc.N_list[i]
                  << ": final mean_err rms = " << format_double(res.rms_final[i]) << "\n";
      std::cerr << "fitted log-log slope = " << format_double(res.slope) << "\n";
    }
    return 0;
  }
  ExperimentResult res = run_experiment(sc);
  emit_records(res.records, sc, o.quiet);
  for (const auto& f : res.failures) std::cerr << "failed: " << f << "\n";
  return res.failures.empty() ? 0 : 2;
}

int cmd_verify(const CommonOpts& o) {
  Scenario sc = load_with_overrides(o);
  std::vector<CheckResult> checks = verify_suite(sc);
  bool all_pass = true;
  for (const auto& c : checks) {
    std::ostringstream line;
    line << (c.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(28) << c.name
         << " measured=" << format_double(c.measured)
         << " tolerance=" << format_double(c.tolerance);
    if (!c.note.empty()) line << "  (" << c.note << ")";
    std::cout << line.str() << "\n";
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 2;
}

struct GroupStats {
  int final_t = 0;
  std::map<int64_t, double> final_mean_err;
  std::map<int64_t, double> final_rmse;
  double cov_sum = 0.0;
  int cov_count = 0;
  double max_ct = 0.0;
  double max_rhs = 0.0;
};

int cmd_report(const std::string& records_path) {
  std::vector<RunRecord> records = read_records(records_path);
  if (records.empty()) {
    std::cout << "no rows in " << records_path << "\n";
    return 0;
  }
  std::map<std::string, GroupStats> groups;
  for (const auto& r : records) {
    std::ostringstream key;
    key << std::left << std::setw(14) << r.variant << " gamma=(" << r.gamma1 << ","
        << r.gamma2 << ") N=" << std::setw(6) << r.N;
    auto& g = groups[key.str()];
    g.final_t = std::max(g.final_t, r.t);
    g.max_ct = std::max(g.max_ct, r.ct_residual);
    g.max_rhs = std::max(g.max_rhs, r.rhs_residual);
  }
  for (const auto& r : records) {
    std::ostringstream key;
    key << std::left << std::setw(14) << r.variant << " gamma=(" << r.gamma1 << ","
        << r.gamma2 << ") N=" << std::setw(6) << r.N;
    auto& g = groups[key.str()];
    if (r.t != g.final_t) continue;
    g.final_mean_err[r.run_id] = r.mean_err;
    g.final_rmse[r.run_id] = r.rmse_truth;
    g.cov_sum += r.cov_err;
    ++g.cov_count;
  }
  std::cout << records.size() << " rows, " << groups.size() << " run group(s)\n\n";
  for (const auto& [key, g] : groups) {
    double mean_rms = 0.0, truth_rms = 0.0;
    for (const auto& [id, v] : g.final_mean_err) mean_rms += v * v;
    for (const auto& [id, v] : g.final_rmse) truth_rms += v * v;
    const auto reps = static_cast<double>(std::max<size_t>(g.final_mean_err.size(), 1));
    mean_rms = std::sqrt(mean_rms / reps);
    truth_rms = std::sqrt(truth_rms / reps);
    std::cout << key << " runs=" << g.final_mean_err.size() << " t_final=" << g.final_t
              << "\n    mean_err(rms)=" << format_double(mean_rms)
              << " cov_err(avg)=" << format_double(g.cov_sum / std::max(g.cov_count, 1))
              << " rmse_truth(rms)=" << format_double(truth_rms)
              << "\n    max ct_residual=" << format_double(g.max_ct)
              << " max rhs_residual=" << format_double(g.max_rhs) << "\n";
  }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"ensemble filter family: simulation, filtering, sweeps, verification"};
  app.require_subcommand(1);

  CommonOpts sim_o, fil_o, swp_o, ver_o;
  CLI::App* sim = app.add_subcommand("simulate", "generate a truth trajectory and observations");
  add_common(sim, sim_o);
  CLI::App* fil = app.add_subcommand("filter", "run one ensemble variant against the exact filter");
  add_common(fil, fil_o);
  CLI::App* swp = app.add_subcommand("sweep", "gamma-grid sweep or ensemble-size convergence study");
  add_common(swp, swp_o);
  CLI::App* ver = app.add_subcommand("verify", "run the identity checks for a scenario");
  add_common(ver, ver_o);
  CLI::App* rep = app.add_subcommand("report", "summarize a records file");
  std::string records_path;
  rep->add_option("records", records_path, "records file written by filter or sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o);
    if (fil->parsed()) return cmd_filter(fil_o);
    if (swp->parsed()) return cmd_sweep(swp_o);
    if (ver->parsed()) return cmd_verify(ver_o);
    if (rep->parsed()) return cmd_report(records_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace enkf
