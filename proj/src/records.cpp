#include "enkf/records.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "enkf/errors.hpp"

namespace enkf {

namespace {

constexpr const char* kHeader =
    "run_id,t,variant,gamma1,gamma2,N,seed,mean_err,cov_err,ct_residual,rhs_residual,rmse_truth";

std::string format_u64(uint64_t v) { return std::to_string(v); }

double parse_double(const std::string& s, const char* field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(std::string("bad numeric value '") + s + "' in field " + field);
  return v;
}

std::string plot_script(const std::string& data_file, RecordFormat format) {
  std::string s = R"PY(#!/usr/bin/env python3
"""Plots error trajectories from @DATA@ and, when several ensemble sizes are
present, the final-step error scaling against N."""
import csv
import json
import math
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "@DATA@")
FORMAT = "@FORMAT@"


def load():
    rows = []
    with open(DATA) as f:
        if FORMAT == "csv":
            rows = list(csv.DictReader(f))
        else:
            rows = [json.loads(line) for line in f if line.strip()]
    return [
        dict(run_id=int(r["run_id"]), t=int(r["t"]), variant=r["variant"],
             gamma1=float(r["gamma1"]), gamma2=float(r["gamma2"]), N=int(r["N"]),
             mean_err=float(r["mean_err"]), cov_err=float(r["cov_err"]),
             rmse_truth=float(r["rmse_truth"]))
        for r in rows
    ]


rows = load()
if not rows:
    raise SystemExit("no records in " + DATA)

groups = defaultdict(list)
for r in rows:
    groups[(r["variant"], r["gamma1"], r["gamma2"], r["N"])].append(r)

fig, ax = plt.subplots(figsize=(8, 5))
for key in sorted(groups):
    per_t = defaultdict(list)
    for r in groups[key]:
        per_t[r["t"]].append(r["mean_err"])
    ts = sorted(per_t)
    avg = [sum(per_t[t]) / len(per_t[t]) for t in ts]
    label = "%s g=(%g,%g) N=%d" % key
    ax.plot(ts, [max(v, 1e-18) for v in avg], marker=".", label=label)
ax.set_yscale("log")
ax.set_xlabel("t")
ax.set_ylabel("mean error vs exact filter")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(DATA + ".png", dpi=120)

sizes = sorted({r["N"] for r in rows})
if len(sizes) >= 3:
    t_final = max(r["t"] for r in rows)
    rms = []
    for n in sizes:
        errs = [r["mean_err"] ** 2 for r in rows if r["N"] == n and r["t"] == t_final]
        rms.append(math.sqrt(sum(errs) / len(errs)))
    xs = [math.log(n) for n in sizes]
    ys = [math.log(v) for v in rms]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / sum(
        (x - xbar) ** 2 for x in xs)
    fig2, ax2 = plt.subplots(figsize=(6, 4.5))
    ax2.loglog(sizes, rms, "o-", label="final-step rms error")
    ax2.loglog(sizes, [rms[0] * (n / sizes[0]) ** -0.5 for n in sizes], "--",
               label="N^-1/2 reference")
    ax2.set_xlabel("ensemble size N")
    ax2.set_ylabel("rms mean error at final step")
    ax2.set_title("fitted slope %.3f" % slope)
    ax2.legend()
    fig2.tight_layout()
    fig2.savefig(DATA + ".convergence.png", dpi=120)
print("wrote", DATA + ".png")
)PY";
  auto replace_all = [&s](const std::string& from, const std::string& to) {
    for (size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos)) {
      s.replace(pos, from.size(), to);
      pos += to.size();
    }
  };
  replace_all("@DATA@", data_file);
  replace_all("@FORMAT@", format == RecordFormat::csv ? "csv" : "jsonl");
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string records_to_string(const std::vector<RunRecord>& records, RecordFormat format) {
  std::ostringstream out;
  if (format == RecordFormat::csv) {
    out << kHeader << '\n';
    for (const auto& r : records) {
      out << r.run_id << ',' << r.t << ',' << r.variant << ',' << format_double(r.gamma1) << ','
          << format_double(r.gamma2) << ',' << r.N << ',' << format_u64(r.seed) << ','
          << format_double(r.mean_err) << ',' << format_double(r.cov_err) << ','
          << format_double(r.ct_residual) << ',' << format_double(r.rhs_residual) << ','
          << format_double(r.rmse_truth) << '\n';
    }
  } else {
    for (const auto& r : records) {
      nlohmann::ordered_json j;
      j["run_id"] = r.run_id;
      j["t"] = r.t;
      j["variant"] = r.variant;
      j["gamma1"] = r.gamma1;
      j["gamma2"] = r.gamma2;
      j["N"] = r.N;
      j["seed"] = r.seed;
      j["mean_err"] = r.mean_err;
      j["cov_err"] = r.cov_err;
      j["ct_residual"] = r.ct_residual;
      j["rhs_residual"] = r.rhs_residual;
      j["rmse_truth"] = r.rmse_truth;
      out << j.dump() << '\n';
    }
  }
  return out.str();
}

void write_records(const std::vector<RunRecord>& records, const std::string& path,
                   RecordFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << records_to_string(records, format);
  if (!out) throw IoError("failed writing records to '" + path + "'");
  out.close();

  std::string stem = path;
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos &&
                                         dot > stem.find_last_of("/\\") + 1)
    stem = stem.substr(0, dot);
  std::string data_name = path;
  if (auto slash = data_name.find_last_of("/\\"); slash != std::string::npos)
    data_name = data_name.substr(slash + 1);
  std::ofstream py(stem + "_plot.py", std::ios::binary);
  if (!py) throw IoError("cannot open '" + stem + "_plot.py' for writing");
  py << plot_script(data_name, format);
}

std::vector<RunRecord> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<RunRecord> records;
  std::string line;
  bool first = true;
  bool jsonl = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      jsonl = line[0] == '{';
      first = false;
      if (!jsonl) {
        if (line != kHeader) throw ParseError("unexpected CSV header in '" + path + "'");
        continue;
      }
    }
    RunRecord r;
    if (jsonl) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("bad JSON line in '" + path + "': " + e.what());
      }
      r.run_id = j.at("run_id").get<int64_t>();
      r.t = j.at("t").get<int>();
      r.variant = j.at("variant").get<std::string>();
      r.gamma1 = j.at("gamma1").get<double>();
      r.gamma2 = j.at("gamma2").get<double>();
      r.N = j.at("N").get<int>();
      r.seed = j.at("seed").get<uint64_t>();
      r.mean_err = j.at("mean_err").get<double>();
      r.cov_err = j.at("cov_err").get<double>();
      r.ct_residual = j.at("ct_residual").get<double>();
      r.rhs_residual = j.at("rhs_residual").get<double>();
      r.rmse_truth = j.at("rmse_truth").get<double>();
    } else {
      std::vector<std::string> parts;
      std::string cur;
      for (char ch : line) {
        if (ch == ',') {
          parts.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(ch);
        }
      }
      parts.push_back(cur);
      if (parts.size() != 12) throw ParseError("bad CSV row in '" + path + "'");
      r.run_id = std::stoll(parts[0]);
      r.t = std::stoi(parts[1]);
      r.variant = parts[2];
      r.gamma1 = parse_double(parts[3], "gamma1");
      r.gamma2 = parse_double(parts[4], "gamma2");
      r.N = std::stoi(parts[5]);
      r.seed = std::stoull(parts[6]);
      r.mean_err = parse_double(parts[7], "mean_err");
      r.cov_err = parse_double(parts[8], "cov_err");
      r.ct_residual = parse_double(parts[9], "ct_residual");
      r.rhs_residual = parse_double(parts[10], "rhs_residual");
      r.rmse_truth = parse_double(parts[11], "rmse_truth");
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace enkf
