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

#include "bal/session.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include <httplib.h>

#include "bal/audio.hpp"

namespace bal {

using nlohmann::json;

std::string to_string(Phase p) {
  switch (p) {
    case Phase::selecting: return "selecting";
    case Phase::awaiting_labels: return "awaiting_labels";
    case Phase::retraining: return "retraining";
    case Phase::done: return "done";
    case Phase::failed: return "failed";
  }
  return "unknown";
}

std::string url_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '~' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

namespace {

HttpResponse json_response(int status, const json& j) { return {status, j.dump(), "application/json"}; }

HttpResponse error_response(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return json_response(status, extra);
}

json field_errors(const std::vector<FieldError>& errors) {
  json a = json::array();
  for (const auto& e : errors) a.push_back({{"field", e.field}, {"message", e.message}});
  return a;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json round_json(const RoundLog& r) {
  return {{"round", r.round},
          {"labeled", r.labeled},
          {"test_accuracy", number_or_null(r.test_accuracy)},
          {"pseudo_label_accuracy", number_or_null(r.pseudo_label_accuracy)},
          {"selected", r.selected},
          {"wall_time_ms", r.wall_time_ms}};
}

std::shared_ptr<const Dataset> dataset_from_json(const json& j, const std::filesystem::path& base, const std::string& name) {
  CampaignConfig probe;
  if (j.contains("cache") && j["cache"].is_string()) {
    std::filesystem::path p = j["cache"].get<std::string>();
    if (p.is_relative()) p = base / p;
    probe.dataset.cache = p.string();
  } else if (j.contains("synthetic")) {
    json wrapper = {{"dataset", {{"synthetic", j["synthetic"]}}}};
    probe = parse_campaign_config(wrapper);
  } else {
    throw ConfigError(std::vector<FieldError>{{"datasets." + name, "must be {\"cache\": prefix} or {\"synthetic\": {...}}"}});
  }
  auto ds = std::make_shared<Dataset>(load_dataset(probe));
  ds->name = name;
  return ds;
}

}  // namespace

ServiceConfig read_service_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument(path.string() + ": cannot open service config");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::vector<FieldError>{{"(file)", path.string() + ": " + e.what()}});
  }
  ServiceConfig cfg;
  std::vector<FieldError> errors;
  if (!j.is_object()) throw ConfigError(std::vector<FieldError>{{"(root)", "must be an object"}});
  for (const auto& [k, v] : j.items())
    if (k != "bind" && k != "port" && k != "multi_session" && k != "datasets" && k != "session")
      errors.push_back({k, "unknown field"});
  if (j.contains("bind")) {
    if (j["bind"].is_string()) cfg.bind = j["bind"].get<std::string>();
    else errors.push_back({"bind", "must be a string"});
  }
  if (j.contains("port")) {
    if (j["port"].is_number_integer()) cfg.port = j["port"].get<int>();
    else errors.push_back({"port", "must be an integer"});
  }
  if (j.contains("multi_session")) {
    if (j["multi_session"].is_boolean()) cfg.multi_session = j["multi_session"].get<bool>();
    else errors.push_back({"multi_session", "must be true or false"});
  }
  if (!j.contains("datasets") || !j["datasets"].is_object() || j["datasets"].empty()) {
    errors.push_back({"datasets", "must map at least one dataset name to its source"});
  }
  if (!errors.empty()) throw ConfigError(errors);
  for (const auto& [name, src] : j["datasets"].items()) cfg.datasets[name] = dataset_from_json(src, path.parent_path(), name);
  if (j.contains("session")) {
    json session = j["session"];
    if (session.contains("checkpoint_dir") && session["checkpoint_dir"].is_string()) {
      std::filesystem::path p = session["checkpoint_dir"].get<std::string>();
      if (p.is_relative()) session["checkpoint_dir"] = (path.parent_path() / p).string();
    }
    cfg.initial_session = session;
  }
  if (const char* b = std::getenv("BAL_BIND")) cfg.bind = b;
  if (const char* p = std::getenv("BAL_PORT")) cfg.port = std::atoi(p);
  if (cfg.port < 0 || cfg.port > 65535) throw ConfigError(std::vector<FieldError>{{"port", "must lie in [0, 65535]"}});
  return cfg;
}

// ---------------------------------------------------------------- service

SessionService::SessionService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  if (!cfg_.manual_executor) worker_ = std::thread([this] { worker_loop(); });
  if (cfg_.initial_session) {
    const auto r = create_session(cfg_.initial_session->dump());
    if (r.status != 201) throw InvalidArgument("initial session rejected: " + r.body);
  }
}

SessionService::~SessionService() {
  {
    std::lock_guard lock(queue_mu_);
    stop_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void SessionService::enqueue(Job job) {
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(job));
  }
  queue_cv_.notify_all();
}

void SessionService::worker_loop() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
      if (stop_) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      running_job_ = true;
    }
    job();
    {
      std::lock_guard lock(queue_mu_);
      running_job_ = false;
    }
    queue_cv_.notify_all();
  }
}

std::size_t SessionService::run_pending() {
  std::size_t n = 0;
  for (;;) {
    Job job;
    {
      std::lock_guard lock(queue_mu_);
      if (queue_.empty()) return n;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    job();
    ++n;
  }
}

void SessionService::wait_idle() {
  if (cfg_.manual_executor) {
    run_pending();
    return;
  }
  std::unique_lock lock(queue_mu_);
  queue_cv_.wait(lock, [&] { return queue_.empty() && !running_job_; });
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionService::fail(const std::shared_ptr<Session>& s, const std::string& what) {
  std::lock_guard lock(mu_);
  s->phase = Phase::failed;
  s->error = what;
}

void SessionService::publish_batch(Session& s) {
  const Campaign& c = *s.campaign;
  const Dataset& ds = c.dataset();
  json items = json::array();
  s.batch_ids.clear();
  for (auto idx : c.pending()) {
    json spec = json::array();
    for (int r = 0; r < ds.record_rows; ++r) {
      json row = json::array();
      for (int k = 0; k < ds.record_cols; ++k) row.push_back(ds.features(static_cast<Eigen::Index>(idx), r * ds.record_cols + k));
      spec.push_back(row);
    }
    const std::string& id = ds.ids[idx];
    items.push_back({{"id", id},
                     {"audio_url", ds.has_audio() ? json("/audio/" + url_encode(id)) : json(nullptr)},
                     {"spectrogram", spec}});
    s.batch_ids.push_back(id);
  }
  json classes = json::array();
  for (int k = 0; k < ds.classes; ++k) classes.push_back(k);
  s.batch = {{"session", s.id}, {"round", c.round() + 1}, {"classes", classes}, {"items", items}};
}

void SessionService::select_job(const std::shared_ptr<Session>& s, bool start) {
  try {
    Campaign& c = *s->campaign;
    if (start && !c.started()) {
      c.start();
      if (!c.config().checkpoint_dir.empty()) c.save_checkpoint(seed_checkpoint_dir(c.config(), c.seed()));
    }
    {
      std::lock_guard lock(mu_);
      s->logs = c.logs();
      s->labeled = c.state().train.size();
      s->pool = c.state().pool.size();
      if (c.finished()) {
        s->phase = Phase::done;
        return;
      }
      s->phase = Phase::selecting;
    }
    c.propose();
    std::lock_guard lock(mu_);
    publish_batch(*s);
    s->phase = Phase::awaiting_labels;
  } catch (const std::exception& e) {
    fail(s, e.what());
  }
}

void SessionService::commit_job(const std::shared_ptr<Session>& s) {
  try {
    std::vector<int> labels;
    {
      std::lock_guard lock(mu_);
      labels = s->submitted;
    }
    Campaign& c = *s->campaign;
    c.commit(labels);
    if (!c.config().checkpoint_dir.empty()) c.save_checkpoint(seed_checkpoint_dir(c.config(), c.seed()));
  } catch (const std::exception& e) {
    fail(s, e.what());
    return;
  }
  select_job(s, false);
}

HttpResponse SessionService::create_session(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_response(400, "request body is not valid JSON", {{"fields", field_errors({{"(body)", e.what()}})}});
  }
  if (!j.is_object()) return error_response(400, "invalid configuration", {{"fields", field_errors({{"(root)", "must be an object"}})}});
  if (!j.contains("dataset") || !j["dataset"].is_string())
    return error_response(400, "invalid configuration",
                          {{"fields", field_errors({{"dataset", "must name a dataset registered with the service"}})}});
  const std::string name = j["dataset"].get<std::string>();
  const auto ds_it = cfg_.datasets.find(name);
  if (ds_it == cfg_.datasets.end()) return error_response(404, "unknown dataset '" + name + "'", {{"dataset", name}});
  if (!j.contains("oracle")) j["oracle"] = "service";

  CampaignConfig cfg;
  try {
    cfg = parse_campaign_config(j);
  } catch (const ConfigError& e) {
    return error_response(400, "invalid configuration", {{"fields", field_errors(e.errors())}});
  }
  auto errors = validate_config(cfg, *ds_it->second);
  if (cfg.seeds.size() != 1) errors.push_back({"seeds", "a session runs exactly one seed"});
  if (!errors.empty()) return error_response(400, "invalid configuration", {{"fields", field_errors(errors)}});

  auto s = std::make_shared<Session>();
  s->dataset = name;
  const std::uint64_t seed = cfg.seeds.front();
  bool resumed = false;
  try {
    const auto dir = cfg.checkpoint_dir.empty() ? std::filesystem::path() : seed_checkpoint_dir(cfg, seed);
    if (!dir.empty() && std::filesystem::exists(dir / "state.json")) {
      s->campaign = std::make_unique<Campaign>(Campaign::restore(dir, ds_it->second));
      resumed = true;
    } else {
      s->campaign = std::make_unique<Campaign>(cfg, ds_it->second, seed);
    }
  } catch (const ConfigError& e) {
    return error_response(400, "invalid configuration", {{"fields", field_errors(e.errors())}});
  } catch (const std::exception& e) {
    return error_response(400, e.what());
  }
  {
    std::lock_guard lock(mu_);
    if (!cfg_.multi_session) {
      for (const auto& [id, other] : sessions_)
        if (other->phase != Phase::done && other->phase != Phase::failed)
          return error_response(409, "a session is already active", {{"session", id}, {"phase", to_string(other->phase)}});
    }
    s->id = "s" + std::to_string(next_id_++);
    sessions_[s->id] = s;
  }
  enqueue([this, s] { select_job(s, true); });
  return json_response(201, {{"id", s->id}, {"phase", to_string(Phase::selecting)}, {"resumed", resumed}});
}

HttpResponse SessionService::get_session(const std::string& id) const {
  const auto s = find(id);
  if (!s) return error_response(404, "unknown session '" + id + "'");
  std::lock_guard lock(mu_);
  const auto& cfg = s->campaign->config();
  json j = {{"id", s->id},
            {"phase", to_string(s->phase)},
            {"dataset", s->dataset},
            {"strategy", to_string(cfg.strategy)},
            {"b", cfg.b},
            {"classes", s->campaign->dataset().classes},
            {"round", s->logs.empty() ? 0 : s->logs.back().round},
            {"rounds_total", cfg.rounds()},
            {"labeled", s->labeled},
            {"pool", s->pool},
            {"start_labels", cfg.start_labels},
            {"end_labels", cfg.end_labels}};
  if (s->phase == Phase::done && !s->logs.empty()) j["final_accuracy"] = number_or_null(s->logs.back().test_accuracy);
  if (!s->error.empty()) j["error"] = s->error;
  return json_response(200, j);
}

HttpResponse SessionService::get_batch(const std::string& id) const {
  const auto s = find(id);
  if (!s) return error_response(404, "unknown session '" + id + "'");
  std::lock_guard lock(mu_);
  if (s->phase != Phase::awaiting_labels)
    return error_response(409, "no batch is awaiting labels in phase " + to_string(s->phase), {{"phase", to_string(s->phase)}});
  return json_response(200, s->batch);
}

HttpResponse SessionService::post_labels(const std::string& id, const std::string& body) {
  const auto s = find(id);
  if (!s) return error_response(404, "unknown session '" + id + "'");
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_response(400, "request body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("labels") || !j["labels"].is_object())
    return error_response(400, "body must be {\"labels\": {sample id: class}}");
  const auto& labels = j["labels"];
  std::size_t round = 0;
  {
    std::lock_guard lock(mu_);
    if (s->phase != Phase::awaiting_labels)
      return error_response(409, "labels are not accepted in phase " + to_string(s->phase), {{"phase", to_string(s->phase)}});
    const int classes = s->campaign->dataset().classes;
    const std::set<std::string> batch(s->batch_ids.begin(), s->batch_ids.end());
    json missing = json::array(), extra = json::array(), invalid = json::array();
    for (const auto& bid : s->batch_ids)
      if (!labels.contains(bid)) missing.push_back(bid);
    for (const auto& [lid, value] : labels.items()) {
      if (!batch.count(lid)) {
        extra.push_back(lid);
        continue;
      }
      if (!value.is_number_integer() || value.get<long long>() < 0 || value.get<long long>() >= classes) invalid.push_back(lid);
    }
    if (!missing.empty() || !extra.empty() || !invalid.empty())
      return error_response(422, "labels must cover exactly the pending batch with classes in [0, " + std::to_string(classes) + ")",
                            {{"missing", missing}, {"extra", extra}, {"invalid", invalid}});
    s->submitted.clear();
    for (const auto& bid : s->batch_ids) s->submitted.push_back(labels[bid].get<int>());
    s->phase = Phase::retraining;
    round = s->batch.value("round", std::size_t{0});
  }
  enqueue([this, s] { commit_job(s); });
  return json_response(200, {{"id", s->id}, {"phase", to_string(Phase::retraining)}, {"round", round}});
}

HttpResponse SessionService::get_metrics(const std::string& id) const {
  const auto s = find(id);
  if (!s) return error_response(404, "unknown session '" + id + "'");
  std::lock_guard lock(mu_);
  json rounds = json::array();
  for (const auto& r : s->logs) rounds.push_back(round_json(r));
  return json_response(200, {{"id", s->id}, {"phase", to_string(s->phase)}, {"rounds", rounds}});
}

HttpResponse SessionService::get_audio(const std::string& sample_id) const {
  for (const auto& [name, ds] : cfg_.datasets) {
    const auto idx = ds->find(sample_id);
    if (!idx) continue;
    if (!ds->has_audio()) return error_response(404, "sample '" + sample_id + "' has no audio");
    try {
      const auto clip = audio::ingest_wav(ds->audio_paths[*idx]);
      const auto bytes = audio::encode_wav(clip.samples, clip.sample_rate);
      return {200, std::string(bytes.begin(), bytes.end()), "audio/wav"};
    } catch (const std::exception& e) {
      return error_response(500, e.what());
    }
  }
  return error_response(404, "unknown sample '" + sample_id + "'");
}

void SessionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, create_session(req.body));
  });
  server.Get(R"(/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get_session(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/batch)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get_batch(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/labels)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, post_labels(req.matches[1], req.body));
  });
  server.Get(R"(/sessions/([^/]+)/metrics)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get_metrics(req.matches[1]));
  });
  server.Get(R"(/audio/(.+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get_audio(httplib::detail::decode_url(req.matches[1], false)));
  });
}

}  // namespace bal
