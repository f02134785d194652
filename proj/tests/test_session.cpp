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

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "bal/audio.hpp"
#include "bal/session.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

#include <httplib.h>

using namespace bal;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const Dataset> clusters() {
  static const auto ds = [] {
    GaussianClustersConfig g;
    g.classes = 3;
    g.points = 90;
    g.dim = 3;
    g.spread = 0.3;
    g.seed = 5;
    return std::make_shared<const Dataset>(make_gaussian_clusters(g));
  }();
  return ds;
}

// Two tone classes with real WAV files behind every sample.
std::shared_ptr<const Dataset> tones() {
  static const auto ds = [] {
    const fs::path dir = scratch_dir("session_tones");
    std::ofstream man(dir / "manifest.tsv");
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 8; ++i) {
        const std::string id = "tone " + std::to_string(k) + "/" + std::to_string(i);
        const std::string file = "t" + std::to_string(k) + "_" + std::to_string(i) + ".wav";
        audio::write_wav(dir / file, oracle::sine(k == 0 ? 400.0 + 20 * i : 4000.0 + 100 * i, 16000, 8000), 16000);
        man << id << "\t" << file << "\t" << k << "\tauto\n";
      }
    man.close();
    IngestOptions opt;
    opt.name = "tones";
    opt.test_fraction = 0.25;
    return std::make_shared<const Dataset>(ingest_dataset(dir / "manifest.tsv", dir, opt));
  }();
  return ds;
}

ServiceConfig manual_service(bool multi = false) {
  ServiceConfig cfg;
  cfg.manual_executor = true;
  cfg.multi_session = multi;
  cfg.datasets["blobs"] = clusters();
  cfg.datasets["tones"] = tones();
  return cfg;
}

json session_body(const std::string& dataset, const std::string& strategy = "bilevel_mixed") {
  return {{"dataset", dataset},
          {"strategy", strategy},
          {"start_labels", dataset == "tones" ? 2 : 3},
          {"end_labels", dataset == "tones" ? 8 : 12},
          {"b", dataset == "tones" ? 2 : 3},
          {"kernel", {{"kind", "rbf"}, {"rbf_gamma", 0}}},
          {"selection", {{"m", 20}, {"nr_it", 50}}}};
}

json parse(const HttpResponse& r) { return json::parse(r.body); }

// Ground-truth labels for the pending batch.
json truth_for(const json& batch, const Dataset& ds) {
  json labels = json::object();
  for (const auto& item : batch["items"]) {
    const std::string id = item["id"];
    labels[id] = ds.labels[*ds.find(id)];
  }
  return {{"labels", labels}};
}

}  // namespace

TEST_CASE("session creation status codes") {
  SessionService svc(manual_service(true));
  const auto a = svc.create_session(session_body("blobs").dump());
  CHECK(a.status == 201);
  const auto b = svc.create_session(session_body("blobs").dump());
  CHECK(b.status == 201);
  CHECK(parse(a)["id"] != parse(b)["id"]);
  CHECK(parse(a)["phase"] == "selecting");

  CHECK(svc.create_session(session_body("nope").dump()).status == 404);
  CHECK(svc.create_session("{").status == 400);
  auto bad = session_body("blobs");
  bad["end_labels"] = 10;
  const auto r = svc.create_session(bad.dump());
  CHECK(r.status == 400);
  CHECK(parse(r)["fields"][0]["field"] == "end_labels");
  bad = session_body("blobs");
  bad["seeds"] = {1, 2};
  CHECK(parse(svc.create_session(bad.dump()))["fields"][0]["field"] == "seeds");
  CHECK(svc.get_session("zzz").status == 404);
  CHECK(svc.get_batch("zzz").status == 404);
  CHECK(svc.post_labels("zzz", "{}").status == 404);
  CHECK(svc.get_metrics("zzz").status == 404);
}

TEST_CASE("a single-session server rejects a second active session") {
  SessionService svc(manual_service(false));
  CHECK(svc.create_session(session_body("blobs").dump()).status == 201);
  const auto second = svc.create_session(session_body("blobs").dump());
  CHECK(second.status == 409);
  CHECK(parse(second)["phase"] == "selecting");
}

TEST_CASE("full labeling loop through the state machine") {
  SessionService svc(manual_service());
  const Dataset& ds = *clusters();
  const std::string id = parse(svc.create_session(session_body("blobs").dump()))["id"];

  CHECK(parse(svc.get_session(id))["phase"] == "selecting");
  const auto early = svc.get_batch(id);
  CHECK(early.status == 409);
  CHECK(parse(early)["phase"] == "selecting");
  svc.run_pending();

  std::set<std::string> committed;
  for (int round = 1; round <= 2; ++round) {
    CHECK(parse(svc.get_session(id))["phase"] == "awaiting_labels");
    const auto b1 = svc.get_batch(id), b2 = svc.get_batch(id);
    CHECK(b1.status == 200);
    CHECK(b1.body == b2.body);
    const json batch = parse(b1);
    CHECK(batch["items"].size() == 3);
    CHECK(batch["classes"].size() == 3);
    for (const auto& item : batch["items"]) {
      CHECK(committed.count(item["id"].get<std::string>()) == 0);
      CHECK(item["spectrogram"].is_array());
      CHECK(item["audio_url"].is_null());
    }

    // Missing one id, then an extra id, then an invalid class.
    json labels = truth_for(batch, ds);
    const std::string dropped = labels["labels"].begin().key();
    json partial = labels;
    partial["labels"].erase(dropped);
    const auto r422 = svc.post_labels(id, partial.dump());
    CHECK(r422.status == 422);
    CHECK(parse(r422)["missing"] == json::array({dropped}));
    json extra = labels;
    extra["labels"]["not-in-batch"] = 0;
    CHECK(parse(svc.post_labels(id, extra.dump()))["extra"] == json::array({"not-in-batch"}));
    json invalid = labels;
    invalid["labels"][dropped] = 7;
    CHECK(svc.post_labels(id, invalid.dump()).status == 422);

    const auto ok = svc.post_labels(id, labels.dump());
    CHECK(ok.status == 200);
    CHECK(parse(ok)["phase"] == "retraining");
    CHECK(svc.post_labels(id, labels.dump()).status == 409);
    CHECK(svc.get_batch(id).status == 409);
    for (const auto& [k, v] : labels["labels"].items()) committed.insert(k);
    svc.run_pending();
  }
  // Third round completes the campaign.
  const json batch = parse(svc.get_batch(id));
  CHECK(svc.post_labels(id, truth_for(batch, ds).dump()).status == 200);
  svc.run_pending();
  const json st = parse(svc.get_session(id));
  CHECK(st["phase"] == "done");
  CHECK(st["labeled"] == 12);
  CHECK(st["final_accuracy"].is_number());
  CHECK(svc.get_batch(id).status == 409);

  const json m = parse(svc.get_metrics(id));
  REQUIRE(m["rounds"].size() == 4);
  CHECK(m["rounds"][3]["test_accuracy"] == st["final_accuracy"]);
  for (std::size_t r = 0; r < 4; ++r) CHECK(m["rounds"][r]["labeled"] == 3 + 3 * r);
}

TEST_CASE("concurrent label posts: exactly one succeeds") {
  SessionService svc(manual_service());
  const std::string id = parse(svc.create_session(session_body("blobs", "uniform").dump()))["id"];
  svc.run_pending();
  const std::string body = truth_for(parse(svc.get_batch(id)), *clusters()).dump();
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      const int status = svc.post_labels(id, body).status;
      if (status == 200) ++ok;
      if (status == 409) ++conflict;
    });
  for (auto& t : threads) t.join();
  CHECK(ok == 1);
  CHECK(conflict == 7);
}

TEST_CASE("real HTTP round trip with audio") {
  ServiceConfig cfg = manual_service();
  cfg.manual_executor = false;
  SessionService svc(cfg);
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto created = cli.Post("/sessions", session_body("tones", "uniform").dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body)["id"];
  CHECK(cli.Post("/sessions", session_body("missing").dump(), "application/json")->status == 404);

  std::string phase;
  for (int rounds = 0; rounds < 3; ++rounds) {
    svc.wait_idle();
    auto st = cli.Get("/sessions/" + id);
    REQUIRE(st);
    CHECK(json::parse(st->body)["phase"] == "awaiting_labels");
    auto b = cli.Get("/sessions/" + id + "/batch");
    REQUIRE(b);
    CHECK(b->status == 200);
    const json batch = json::parse(b->body);
    CHECK(batch["items"].size() == 2);
    for (const auto& item : batch["items"]) {
      CHECK(item["spectrogram"].size() == 32);
      auto wav = cli.Get(item["audio_url"].get<std::string>());
      REQUIRE(wav);
      CHECK(wav->status == 200);
      CHECK(wav->get_header_value("Content-Type") == "audio/wav");
      CHECK(wav->body.substr(0, 4) == "RIFF");
    }
    auto posted = cli.Post("/sessions/" + id + "/labels", truth_for(batch, *tones()).dump(), "application/json");
    REQUIRE(posted);
    CHECK(posted->status == 200);
  }
  svc.wait_idle();
  const json st = json::parse(cli.Get("/sessions/" + id)->body);
  CHECK(st["phase"] == "done");
  CHECK(st["final_accuracy"].is_number());
  CHECK(cli.Get("/sessions/" + id + "/metrics")->status == 200);
  CHECK(cli.Get("/audio/nope")->status == 404);
  server.stop();
  th.join();
}

TEST_CASE("service config files") {
  const fs::path dir = scratch_dir("service_cfg");
  write_feature_cache(dir / "blobs", *clusters());
  std::ofstream(dir / "svc.json") << json{{"port", 0},
                                          {"multi_session", true},
                                          {"datasets", {{"blobs", {{"cache", "blobs"}}},
                                                        {"syn", {{"synthetic", {{"classes", 2}, {"points", 20}}}}}}}}
                                         .dump();
  const ServiceConfig cfg = read_service_config(dir / "svc.json");
  CHECK(cfg.multi_session);
  CHECK(cfg.datasets.at("blobs")->size() == 90);
  CHECK(cfg.datasets.at("syn")->classes == 2);
  std::ofstream(dir / "bad.json") << json{{"port", "x"}, {"datasets", json::object()}}.dump();
  CHECK_THROWS_AS(read_service_config(dir / "bad.json"), ConfigError);
  CHECK(url_encode("a b/c") == "a%20b%2Fc");
}
