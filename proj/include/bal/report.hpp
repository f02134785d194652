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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bal/campaign.hpp"

namespace bal {

// Round log, tab separated, one record per line. Header lines start with '#':
//
//   #bal-round-log 1
//   #strategy <name>
//   #seed     <seed>
//   round <round> <labeled> <test_accuracy> <pseudo_label_accuracy> <selected ids, comma separated or ->
//   step  <round> <step> <chosen id> <score> <cg_residual> <cg_iterations>
//
// Step records precede the round record they produced. Reals use %.17g so a
// parse-back reproduces them exactly. Wall times are written separately.
void write_round_log(std::ostream& os, const SeedLog& log, const Dataset& dataset);
SeedLog read_round_log(std::istream& is, const std::string& name);
void write_round_log_file(const std::filesystem::path& path, const SeedLog& log, const Dataset& dataset);
SeedLog read_round_log_file(const std::filesystem::path& path);

// "round<TAB>wall_time_ms" sidecar.
void write_timing(std::ostream& os, const SeedLog& log);

struct SummaryRow {
  std::string strategy;
  std::size_t seeds = 0;
  std::size_t rounds = 0;  // completed rounds (log length - 1)
  std::size_t final_labeled = 0;
  double final_mean = 0.0;
  double final_std = 0.0;
};

struct SeriesRow {
  std::string strategy;
  std::size_t round = 0;
  std::size_t labeled = 0;
  double mean = 0.0;
  double std = 0.0;
  double pseudo_mean = 0.0;
  double pseudo_std = 0.0;
  std::size_t seeds = 0;
};

// One row per strategy, sorted by final mean accuracy (descending, then name).
std::vector<SummaryRow> summarize(const std::vector<ExperimentResult>& results);
std::vector<SeriesRow> series(const std::vector<ExperimentResult>& results);

void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_series(std::ostream& os, const std::vector<SeriesRow>& rows);
std::vector<SummaryRow> parse_summary(std::istream& is);
std::vector<SeriesRow> parse_series(std::istream& is);

// Groups seed logs by strategy and aggregates them.
std::vector<ExperimentResult> group_results(const std::vector<SeedLog>& logs);

}  // namespace bal
