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

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bal/campaign.hpp"

namespace httplib {
class Server;
}

namespace bal {

enum class Phase { selecting, awaiting_labels, retraining, done, failed };

std::string to_string(Phase p);

struct ServiceConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  bool multi_session = false;
  // Jobs wait in the queue until run_pending() instead of a worker thread.
  bool manual_executor = false;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets;
  std::optional<nlohmann::json> initial_session;  // campaign config created at startup
};

// JSON file: {"bind", "port", "multi_session", "datasets": {name: {"cache": prefix} |
// {"synthetic": {...}}}, "session": campaign config}. BAL_BIND and BAL_PORT
// override the address.
ServiceConfig read_service_config(const std::filesystem::path& path);

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class SessionService {
 public:
  explicit SessionService(ServiceConfig cfg);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  HttpResponse create_session(const std::string& body);
  HttpResponse get_session(const std::string& id) const;
  HttpResponse get_batch(const std::string& id) const;
  HttpResponse post_labels(const std::string& id, const std::string& body);
  HttpResponse get_metrics(const std::string& id) const;
  HttpResponse get_audio(const std::string& sample_id) const;

  // Manual executor: runs queued jobs (and the ones they enqueue) to completion.
  std::size_t run_pending();
  // Worker mode: blocks until the queue is empty and no job is running.
  void wait_idle();

  void mount(httplib::Server& server);
  const ServiceConfig& config() const { return cfg_; }

 private:
  struct Session {
    std::string id;
    std::string dataset;
    std::unique_ptr<Campaign> campaign;  // touched only by jobs
    Phase phase = Phase::selecting;
    std::string error;
    // Snapshots published by jobs, read by handlers.
    nlohmann::json batch;
    std::vector<std::string> batch_ids;
    std::vector<RoundLog> logs;
    std::size_t labeled = 0;
    std::size_t pool = 0;
    std::vector<int> submitted;
  };
  using Job = std::function<void()>;

  void enqueue(Job job);
  void worker_loop();
  void select_job(const std::shared_ptr<Session>& s, bool start);
  void commit_job(const std::shared_ptr<Session>& s);
  void publish_batch(Session& s);
  void fail(const std::shared_ptr<Session>& s, const std::string& what);
  std::shared_ptr<Session> find(const std::string& id) const;

  ServiceConfig cfg_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_id_ = 1;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Job> queue_;
  bool running_job_ = false;
  bool stop_ = false;
  std::thread worker_;
};

// Percent-encodes everything outside [A-Za-z0-9._~-].
std::string url_encode(const std::string& s);

}  // namespace bal
