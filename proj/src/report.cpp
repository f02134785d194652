// Copyright 2026 The bal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bal/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace bal {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::string f;
  std::istringstream ss(line);
  while (std::getline(ss, f, '\t')) out.push_back(f);
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw InvalidArgument(where + ": '" + s + "' is not a number");
  return v;
}

std::size_t to_size(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') throw InvalidArgument(where + ": '" + s + "' is not a count");
  return static_cast<std::size_t>(v);
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void write_round_log(std::ostream& os, const SeedLog& log, const Dataset& dataset) {
  os << "#bal-round-log\t1\n";
  os << "#strategy\t" << to_string(log.strategy) << '\n';
  os << "#seed\t" << log.seed << '\n';
  for (const auto& r : log.rounds) {
    for (const auto& s : r.trace)
      os << "step\t" << r.round << '\t' << s.step << '\t' << dataset.ids.at(s.chosen) << '\t' << fmt(s.score) << '\t'
         << fmt(s.cg_residual) << '\t' << s.cg_iterations << '\n';
    os << "round\t" << r.round << '\t' << r.labeled << '\t' << fmt(r.test_accuracy) << '\t' << fmt(r.pseudo_label_accuracy)
       << '\t';
    if (r.selected.empty()) os << '-';
    for (std::size_t i = 0; i < r.selected.size(); ++i) os << (i ? "," : "") << r.selected[i];
    os << '\n';
  }
}

SeedLog read_round_log(std::istream& is, const std::string& name) {
  SeedLog log;
  std::string line;
  int lineno = 0;
  bool header = false;
  std::vector<SelectionStep> steps;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = fields(line);
    const std::string where = name + ":" + std::to_string(lineno);
    if (f[0] == "#bal-round-log") {
      header = true;
    } else if (f[0] == "#strategy" && f.size() == 2) {
      log.strategy = strategy_from_string(f[1]);
    } else if (f[0] == "#seed" && f.size() == 2) {
      log.seed = to_size(f[1], where);
    } else if (f[0][0] == '#') {
      continue;
    } else if (f[0] == "step") {
      if (f.size() != 7) throw InvalidArgument(where + ": step record needs 7 fields");
      SelectionStep s;
      s.step = to_size(f[2], where);
      s.score = to_double(f[4], where);
      s.cg_residual = to_double(f[5], where);
      s.cg_iterations = static_cast<int>(to_size(f[6], where));
      steps.push_back(s);
    } else if (f[0] == "round") {
      if (f.size() != 6) throw InvalidArgument(where + ": round record needs 6 fields");
      RoundLog r;
      r.round = to_size(f[1], where);
      r.labeled = to_size(f[2], where);
      r.test_accuracy = to_double(f[3], where);
      r.pseudo_label_accuracy = to_double(f[4], where);
      if (f[5] != "-") {
        std::istringstream ss(f[5]);
        std::string id;
        while (std::getline(ss, id, ',')) r.selected.push_back(id);
      }
      r.trace = std::move(steps);
      steps.clear();
      log.rounds.push_back(std::move(r));
    } else {
      throw InvalidArgument(where + ": unknown record type '" + f[0] + "'");
    }
  }
  if (!header) throw InvalidArgument(name + ": not a round log");
  return log;
}

void write_round_log_file(const std::filesystem::path& path, const SeedLog& log, const Dataset& dataset) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  write_round_log(os, log, dataset);
}

SeedLog read_round_log_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  return read_round_log(is, path.string());
}

void write_timing(std::ostream& os, const SeedLog& log) {
  os << "round\twall_time_ms\n";
  for (const auto& r : log.rounds) os << r.round << '\t' << fmt(r.wall_time_ms) << '\n';
}

std::vector<ExperimentResult> group_results(const std::vector<SeedLog>& logs) {
  std::map<std::string, ExperimentResult> by;
  for (const auto& l : logs) {
    auto& r = by[to_string(l.strategy)];
    r.strategy = l.strategy;
    r.seeds.push_back(l);
  }
  std::vector<ExperimentResult> out;
  for (auto& [name, r] : by) {
    std::sort(r.seeds.begin(), r.seeds.end(), [](const SeedLog& a, const SeedLog& b) { return a.seed < b.seed; });
    r.summary = aggregate(r.seeds);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentResult>& results) {
  std::vector<SummaryRow> rows;
  for (const auto& r : results) {
    if (r.summary.empty()) continue;
    SummaryRow row;
    row.strategy = to_string(r.strategy);
    row.seeds = r.seeds.size();
    row.rounds = r.summary.size() - 1;
    row.final_labeled = r.summary.back().labeled;
    row.final_mean = r.final_mean();
    row.final_std = r.final_std();
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.final_mean != b.final_mean) return a.final_mean > b.final_mean;
    return a.strategy < b.strategy;
  });
  return rows;
}

std::vector<SeriesRow> series(const std::vector<ExperimentResult>& results) {
  std::vector<SeriesRow> rows;
  for (const auto& r : results)
    for (const auto& s : r.summary)
      rows.push_back({to_string(r.strategy), s.round, s.labeled, s.mean, s.std, s.pseudo_mean, s.pseudo_std, s.seeds});
  return rows;
}

void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "strategy\tseeds\trounds\tfinal_labeled\tfinal_mean\tfinal_std\n";
  for (const auto& r : rows)
    os << r.strategy << '\t' << r.seeds << '\t' << r.rounds << '\t' << r.final_labeled << '\t' << fmt(r.final_mean) << '\t'
       << fmt(r.final_std) << '\n';
}

void write_series(std::ostream& os, const std::vector<SeriesRow>& rows) {
  os << "strategy\tround\tlabeled\tmean\tstd\tpseudo_mean\tpseudo_std\tseeds\n";
  for (const auto& r : rows)
    os << r.strategy << '\t' << r.round << '\t' << r.labeled << '\t' << fmt(r.mean) << '\t' << fmt(r.std) << '\t'
       << fmt(r.pseudo_mean) << '\t' << fmt(r.pseudo_std) << '\t' << r.seeds << '\n';
}

std::vector<SummaryRow> parse_summary(std::istream& is) {
  std::vector<SummaryRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line.rfind("strategy\t", 0) == 0) continue;
    const auto f = fields(line);
    const std::string where = "summary:" + std::to_string(lineno);
    if (f.size() != 6) throw InvalidArgument(where + ": expected 6 fields");
    rows.push_back({f[0], to_size(f[1], where), to_size(f[2], where), to_size(f[3], where), to_double(f[4], where),
                    to_double(f[5], where)});
  }
  return rows;
}

std::vector<SeriesRow> parse_series(std::istream& is) {
  std::vector<SeriesRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line.rfind("strategy\t", 0) == 0) continue;
    const auto f = fields(line);
    const std::string where = "series:" + std::to_string(lineno);
    if (f.size() != 8) throw InvalidArgument(where + ": expected 8 fields");
    rows.push_back({f[0], to_size(f[1], where), to_size(f[2], where), to_double(f[3], where), to_double(f[4], where),
                    to_double(f[5], where), to_double(f[6], where), to_size(f[7], where)});
  }
  return rows;
}

}  // namespace bal
