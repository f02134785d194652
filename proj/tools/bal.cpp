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

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bal/campaign.hpp"
#include "bal/config.hpp"
#include "bal/dataset.hpp"
#include "bal/report.hpp"
#include "bal/session.hpp"

// After Eigen: resolv.h defines a macro that collides with Eigen internals.
#include <httplib.h>

namespace fs = std::filesystem;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void print_field_errors(const bal::ConfigError& e) {
  std::cerr << "error: invalid configuration\n";
  for (const auto& f : e.errors()) std::cerr << "  " << f.field << ": " << f.message << '\n';
}

void write_results(const fs::path& out, const std::vector<bal::ExperimentResult>& results) {
  fs::create_directories(out);
  {
    std::ofstream os(out / "summary.tsv");
    bal::write_summary(os, bal::summarize(results));
  }
  std::ofstream os(out / "series.tsv");
  bal::write_series(os, bal::series(results));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch active learning via bilevel optimization"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a feature cache from a WAV manifest or synthetic clusters");
  std::string manifest, root, out_prefix, name = "dataset";
  int classes = 0;
  double test_fraction = 0.2;
  std::uint64_t ingest_seed = 0;
  bool synthetic = false;
  bal::GaussianClustersConfig gc;
  ingest->add_option("--manifest", manifest, "TSV manifest: id, wav path, label|-, train|test|auto");
  ingest->add_option("--root", root, "Directory wav paths are relative to (default: manifest directory)");
  ingest->add_option("--out", out_prefix, "Output prefix for <prefix>.bin and <prefix>.index.tsv")->required();
  ingest->add_option("--name", name, "Dataset name");
  ingest->add_option("--classes", classes, "Class count (0: 1 + largest label)");
  ingest->add_option("--test-fraction", test_fraction, "Stratified holdout fraction for split=auto records");
  ingest->add_option("--seed", ingest_seed, "Holdout / generator seed");
  ingest->add_flag("--synthetic", synthetic, "Generate Gaussian clusters instead of reading audio");
  ingest->add_option("--points", gc.points, "Synthetic: number of points");
  ingest->add_option("--dim", gc.dim, "Synthetic: dimension");
  ingest->add_option("--spread", gc.spread, "Synthetic: within-cluster std");
  ingest->add_option("--center-scale", gc.center_scale, "Synthetic: std of cluster centers");

  // run-sim
  auto* run = app.add_subcommand("run-sim", "Run a simulated-oracle campaign");
  std::string config_path, out_dir = "results", strategy;
  std::vector<std::uint64_t> seeds;
  int rounds = -1;
  bool resume = false;
  run->add_option("--config", config_path, "Campaign config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory for round logs and summaries");
  run->add_option("--seed", seeds, "Seed(s); overrides the config seeds");
  run->add_option("--strategy", strategy, "Strategy; overrides the config");
  run->add_option("--rounds", rounds, "Number of rounds; sets end_labels = start_labels + rounds * b");
  run->add_flag("--resume", resume, "Continue from checkpoints in checkpoint_dir");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a labeling session over HTTP (BAL_BIND, BAL_PORT override)");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Service config (JSON)")->required();

  // report
  auto* report = app.add_subcommand("report", "Aggregate round logs into summary.tsv and series.tsv");
  std::vector<std::string> inputs;
  std::string report_out = ".";
  report->add_option("inputs", inputs, "Round-log files or directories containing *.rounds.tsv")->required();
  report->add_option("--out", report_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      bal::Dataset ds;
      if (synthetic) {
        gc.classes = classes > 0 ? classes : gc.classes;
        gc.test_fraction = test_fraction;
        gc.seed = ingest_seed;
        ds = bal::make_gaussian_clusters(gc);
        if (name != "dataset") ds.name = name;
      } else {
        if (manifest.empty()) throw bal::InvalidArgument("ingest: --manifest or --synthetic is required");
        bal::IngestOptions opt{name, classes, test_fraction, ingest_seed};
        const fs::path base = root.empty() ? fs::path(manifest).parent_path() : fs::path(root);
        ds = bal::ingest_dataset(manifest, base, opt);
      }
      if (fs::path(out_prefix).has_parent_path()) fs::create_directories(fs::path(out_prefix).parent_path());
      bal::write_feature_cache(out_prefix, ds);
      std::cout << "wrote " << ds.size() << " records (" << ds.indices(bal::Split::train).size() << " train, "
                << ds.indices(bal::Split::test).size() << " test) to " << out_prefix << ".bin\n";
      return 0;
    }

    if (*run) {
      bal::CampaignConfig cfg = bal::read_campaign_config(config_path);
      if (!seeds.empty()) cfg.seeds = seeds;
      if (!strategy.empty()) cfg.strategy = bal::strategy_from_string(strategy);
      if (rounds >= 0) cfg.end_labels = cfg.start_labels + static_cast<std::size_t>(rounds) * cfg.b;
      cfg.oracle = bal::OracleKind::simulated;
      if (const auto errors = bal::validate_config(cfg); !errors.empty()) throw bal::ConfigError(errors);
      auto ds = std::make_shared<const bal::Dataset>(bal::load_dataset(cfg, fs::path(config_path).parent_path()));
      const auto result = bal::run_campaign(cfg, ds, nullptr, bal::RunOptions{resume});
      const fs::path out = out_dir;
      fs::create_directories(out);
      for (const auto& s : result.seeds) {
        const std::string stem = bal::to_string(s.strategy) + "_seed_" + std::to_string(s.seed);
        bal::write_round_log_file(out / (stem + ".rounds.tsv"), s, *ds);
        std::ofstream timing(out / (stem + ".timing.tsv"));
        bal::write_timing(timing, s);
      }
      write_results(out, {result});
      for (const auto& r : result.summary)
        std::printf("round %zu labeled %zu accuracy %.4f +- %.4f pseudo %.4f\n", r.round, r.labeled, r.mean, r.std,
                    r.pseudo_mean);
      return 0;
    }

    if (*serve) {
      bal::ServiceConfig cfg = bal::read_service_config(serve_config);
      bal::SessionService service(cfg);
      httplib::Server server;
      service.mount(server);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << cfg.bind << ":" << cfg.port << std::endl;
      if (!server.listen(cfg.bind, cfg.port)) {
        std::cerr << "error: cannot listen on " << cfg.bind << ":" << cfg.port << '\n';
        return 1;
      }
      return 0;
    }

    if (*report) {
      std::vector<bal::SeedLog> logs;
      for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
          std::vector<fs::path> files;
          for (const auto& e : fs::directory_iterator(in))
            if (e.path().string().ends_with(".rounds.tsv")) files.push_back(e.path());
          std::sort(files.begin(), files.end());
          for (const auto& f : files) logs.push_back(bal::read_round_log_file(f));
        } else {
          logs.push_back(bal::read_round_log_file(in));
        }
      }
      if (logs.empty()) throw bal::InvalidArgument("report: no round logs found");
      const auto results = bal::group_results(logs);
      write_results(report_out, results);
      bal::write_summary(std::cout, bal::summarize(results));
      return 0;
    }
  } catch (const bal::ConfigError& e) {
    print_field_errors(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
