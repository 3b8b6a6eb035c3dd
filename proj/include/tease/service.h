// Copyright 2026 The Tease Authors.
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

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tease/dataset.h"
#include "tease/random.h"
#include "tease/recommend.h"

namespace tease {

using Json = nlohmann::json;

struct ServiceConfig {
  // Append-only session event log; empty keeps sessions in memory only.
  std::filesystem::path session_log;
  // Clicks on the popularity tag applied while a session has no history and
  // no feedback, so new users see the most popular items.
  int cold_start_popularity_clicks = 1;
  std::size_t max_k = 1000;
  std::uint64_t session_seed = 0;  // 0 draws from std::random_device
};

struct Session {
  std::mutex mutex;  // one writer per session
  UserState state;
  std::chrono::system_clock::time_point created;
  std::chrono::system_clock::time_point updated;
};

// Session store and JSON payloads behind the HTTP routes. Thread-safe.
class RecommendationService {
 public:
  RecommendationService(ServiceConfig config, ItemMetadata metadata);
  ~RecommendationService();

  // The recommender's encoder must carry item ids. Replaces any previous
  // model; existing sessions are kept.
  void load_model(std::shared_ptr<const Recommender> recommender);
  bool model_loaded() const;

  // Rebuilds sessions from an event log written by this class. Returns the
  // number of events applied.
  std::size_t replay(std::istream& log);

  std::string create_session();
  Json profile(const std::string& session) const;
  Json add_history(const std::string& session, const std::string& item_id);
  Json remove_history(const std::string& session, const std::string& item_id);
  // direction is "+" or "-".
  Json post_feedback(const std::string& session, std::size_t tag,
                     const std::string& direction);
  Json recommendations(const std::string& session, std::size_t k, bool ensemble) const;
  Json item(const std::string& item_id) const;
  Json tags() const;

  UserState state(const std::string& session) const;
  std::size_t num_sessions() const;

 private:
  std::shared_ptr<const Recommender> model() const;
  std::shared_ptr<Session> find(const std::string& session) const;
  std::uint32_t item_index(const Recommender& rec, const std::string& item_id) const;
  UserState scoring_state(const Recommender& rec, const UserState& s) const;
  Json profile_json(const Recommender& rec, const UserState& s) const;
  Json recommendations_json(const Recommender& rec, const UserState& s, std::size_t k,
                            bool ensemble) const;
  Json item_json(const Recommender& rec, std::uint32_t item) const;
  Json update_response(const Recommender& rec, const UserState& s) const;
  void log_event(Json event);
  std::string new_session_id();

  ServiceConfig config_;
  ItemMetadata metadata_;

  mutable std::shared_mutex model_mutex_;
  std::shared_ptr<const Recommender> model_;
  std::unordered_map<std::string, std::uint32_t> item_lookup_;

  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;

  std::mutex id_mutex_;
  Rng id_rng_;

  std::mutex log_mutex_;
  std::unique_ptr<std::ofstream> log_;
};

// HTTP front end. Routes:
//   POST   /sessions
//   GET    /sessions/{id}/profile
//   POST   /sessions/{id}/history            {"item_id": ...}
//   DELETE /sessions/{id}/history/{item_id}
//   POST   /sessions/{id}/feedback           {"tag_id": n, "direction": "+"|"-"}
//   GET    /sessions/{id}/recommendations?k=20&ensemble=false
//   GET    /items/{id}
//   GET    /tags
class HttpServer {
 public:
  explicit HttpServer(RecommendationService& service);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port or throws ResourceError.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tease
