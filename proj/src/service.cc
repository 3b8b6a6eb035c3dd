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

#include "tease/service.h"

#include <ctime>
#include <fstream>
#include <istream>
#include <random>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "tease/errors.h"

namespace tease {

namespace {

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int parse_direction(const std::string& direction) {
  if (direction == "+" || direction == "up") return +1;
  if (direction == "-" || direction == "down") return -1;
  throw ValidationError("direction must be \"+\" or \"-\", got \"" + direction + "\"");
}

}  // namespace

RecommendationService::RecommendationService(ServiceConfig config, ItemMetadata metadata)
    : config_(std::move(config)), metadata_(std::move(metadata)) {
  metadata_.reindex();
  id_rng_.seed(config_.session_seed != 0 ? config_.session_seed
                                         : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                               std::random_device{}());
  if (!config_.session_log.empty()) {
    log_ = std::make_unique<std::ofstream>(config_.session_log, std::ios::app);
    if (!*log_) {
      throw ResourceError("cannot open session log " + config_.session_log.string());
    }
  }
}

RecommendationService::~RecommendationService() = default;

void RecommendationService::load_model(std::shared_ptr<const Recommender> recommender) {
  if (!recommender) throw ValidationError("no model given");
  const auto& ids = recommender->encoder().item_ids;
  if (ids.size() != recommender->num_items()) {
    throw ValidationError("model carries " + std::to_string(ids.size()) + " item ids for " +
                          std::to_string(recommender->num_items()) + " items");
  }
  std::unordered_map<std::string, std::uint32_t> lookup;
  for (std::size_t i = 0; i < ids.size(); ++i) lookup.emplace(ids[i], static_cast<std::uint32_t>(i));
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, session] : sessions_) {
      std::lock_guard guard(session->mutex);
      if (session->state.clicks.size() != recommender->num_tags()) {
        throw ValidationError("new model has " + std::to_string(recommender->num_tags()) +
                              " tags but session " + id + " has " +
                              std::to_string(session->state.clicks.size()));
      }
    }
  }
  std::unique_lock lock(model_mutex_);
  model_ = std::move(recommender);
  item_lookup_ = std::move(lookup);
}

bool RecommendationService::model_loaded() const {
  std::shared_lock lock(model_mutex_);
  return model_ != nullptr;
}

std::shared_ptr<const Recommender> RecommendationService::model() const {
  std::shared_lock lock(model_mutex_);
  if (!model_) throw UnavailableError("no model loaded");
  return model_;
}

std::shared_ptr<Session> RecommendationService::find(const std::string& session) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session);
  return it->second;
}

std::uint32_t RecommendationService::item_index(const Recommender&, const std::string& item_id) const {
  std::shared_lock lock(model_mutex_);
  const auto it = item_lookup_.find(item_id);
  if (it == item_lookup_.end()) throw NotFoundError("unknown item " + item_id);
  return it->second;
}

std::string RecommendationService::new_session_id() {
  std::lock_guard lock(id_mutex_);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(id_rng_()),
                static_cast<unsigned long long>(id_rng_()));
  return buf;
}

void RecommendationService::log_event(Json event) {
  if (!log_) return;
  event["time"] = iso_time(std::chrono::system_clock::now());
  std::lock_guard lock(log_mutex_);
  *log_ << event.dump() << '\n';
  log_->flush();
  if (!*log_) throw ResourceError("write to session log failed");
}

std::string RecommendationService::create_session() {
  const auto rec = model();
  auto session = std::make_shared<Session>();
  session->state = rec->empty_state();
  session->created = session->updated = std::chrono::system_clock::now();
  std::string id;
  {
    std::unique_lock lock(sessions_mutex_);
    do {
      id = new_session_id();
    } while (sessions_.count(id));
    sessions_.emplace(id, session);
  }
  log_event({{"event", "create"}, {"session", id}});
  return id;
}

UserState RecommendationService::state(const std::string& session) const {
  const auto s = find(session);
  std::lock_guard lock(s->mutex);
  return s->state;
}

std::size_t RecommendationService::num_sessions() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

UserState RecommendationService::scoring_state(const Recommender& rec, const UserState& s) const {
  if (config_.cold_start_popularity_clicks == 0 || !s.history.empty()) return s;
  for (const int c : s.clicks) {
    if (c != 0) return s;
  }
  UserState boosted = s;
  boosted.clicks[rec.tags().popularity_tag()] =
      std::clamp(config_.cold_start_popularity_clicks, -kMaxClicks, kMaxClicks);
  return boosted;
}

Json RecommendationService::profile_json(const Recommender& rec, const UserState& s) const {
  const UserState effective = scoring_state(rec, s);
  const TagProfile p = rec.profile(effective);
  const auto& tags = rec.tags();
  Json out;
  out["certainty"] = p.certainty;
  out["cold_start"] = !(effective == s);
  Json history = Json::array();
  for (const auto i : s.history) history.push_back(rec.encoder().item_ids[i]);
  out["history"] = std::move(history);
  Json tag_rows = Json::array();
  for (std::size_t k = 0; k < tags.num_tags(); ++k) {
    tag_rows.push_back({{"tag", k},
                        {"category", tags.vocabulary[k].category},
                        {"label", tags.vocabulary[k].label},
                        {"display_affinity", p.display[static_cast<Eigen::Index>(k)]},
                        {"feedback_clicks", s.clicks[k]}});
  }
  out["tags"] = std::move(tag_rows);
  const auto impact = category_impact(p.display, tags);
  Json cats = Json::array();
  for (std::size_t c = 0; c < impact.size(); ++c) {
    cats.push_back({{"name", tags.categories[c]}, {"impact", impact[c]}});
  }
  out["categories"] = std::move(cats);
  return out;
}

Json RecommendationService::item_json(const Recommender& rec, std::uint32_t item) const {
  const std::string& id = rec.encoder().item_ids[item];
  Json out;
  out["item_id"] = id;
  const std::string* title = metadata_.find(id, "title");
  out["title"] = title ? *title : id;
  if (const std::string* d = metadata_.find(id, "description")) out["description"] = *d;
  return out;
}

Json RecommendationService::recommendations_json(const Recommender& rec, const UserState& s,
                                                 std::size_t k, bool ensemble) const {
  if (k == 0 || k > config_.max_k) {
    throw ValidationError("k must be in [1, " + std::to_string(config_.max_k) + "]");
  }
  if (ensemble && !rec.has_item_model()) {
    throw ValidationError("ensemble requested but no item-item model is loaded");
  }
  const UserState effective = scoring_state(rec, s);
  const auto ranked =
      rec.recommend(effective, k, ensemble ? ScoringMode::kEnsemble : ScoringMode::kEncoder);
  const auto& tags = rec.tags();
  Json items = Json::array();
  for (const auto& r : ranked) {
    Json row = item_json(rec, r.item);
    row["score"] = r.score;
    row["encoder_score"] = r.encoder_score;
    row["percent_match"] = r.percent_match;
    Json ex = Json::array();
    for (const auto& e : r.explanations) {
      ex.push_back({{"tag", e.tag},
                    {"category", tags.vocabulary[e.tag].category},
                    {"label", tags.vocabulary[e.tag].label},
                    {"percent", e.percent}});
    }
    row["explanations"] = std::move(ex);
    items.push_back(std::move(row));
  }
  return {{"items", std::move(items)}, {"ensemble", ensemble}, {"profile", profile_json(rec, s)}};
}

Json RecommendationService::update_response(const Recommender& rec, const UserState& s) const {
  return {{"profile", profile_json(rec, s)},
          {"recommendations", recommendations_json(rec, s, std::min<std::size_t>(20, config_.max_k), false)}};
}

Json RecommendationService::profile(const std::string& session) const {
  const auto rec = model();
  return profile_json(*rec, state(session));
}

Json RecommendationService::add_history(const std::string& session, const std::string& item_id) {
  const auto rec = model();
  const auto item = item_index(*rec, item_id);
  const auto s = find(session);
  std::lock_guard lock(s->mutex);
  UserState next = tease::add_history(s->state, item);
  log_event({{"event", "add"}, {"session", session}, {"item_id", item_id}});
  s->state = std::move(next);
  s->updated = std::chrono::system_clock::now();
  return update_response(*rec, s->state);
}

Json RecommendationService::remove_history(const std::string& session, const std::string& item_id) {
  const auto rec = model();
  const auto item = item_index(*rec, item_id);
  const auto s = find(session);
  std::lock_guard lock(s->mutex);
  UserState next = tease::remove_history(s->state, item);
  log_event({{"event", "remove"}, {"session", session}, {"item_id", item_id}});
  s->state = std::move(next);
  s->updated = std::chrono::system_clock::now();
  return update_response(*rec, s->state);
}

Json RecommendationService::post_feedback(const std::string& session, std::size_t tag,
                                          const std::string& direction) {
  const auto rec = model();
  const int delta = parse_direction(direction);
  if (tag >= rec->num_tags()) throw NotFoundError("unknown tag " + std::to_string(tag));
  const auto s = find(session);
  std::lock_guard lock(s->mutex);
  UserState next = apply_feedback(s->state, tag, delta);
  const auto& t = rec->tags().vocabulary[tag];
  log_event({{"event", "feedback"},
             {"session", session},
             {"tag_id", tag},
             {"tag", t.category + ":" + t.label},
             {"delta", delta}});
  s->state = std::move(next);
  s->updated = std::chrono::system_clock::now();
  return update_response(*rec, s->state);
}

Json RecommendationService::recommendations(const std::string& session, std::size_t k,
                                            bool ensemble) const {
  const auto rec = model();
  return recommendations_json(*rec, state(session), k, ensemble);
}

Json RecommendationService::item(const std::string& item_id) const {
  const auto rec = model();
  const auto i = item_index(*rec, item_id);
  Json out = item_json(*rec, i);
  Json fields = Json::object();
  if (metadata_.has_item(item_id)) {
    for (const auto row : metadata_.rows_of(item_id)) {
      fields[metadata_.rows[row].category].push_back(metadata_.rows[row].value);
    }
  }
  out["metadata"] = std::move(fields);
  return out;
}

Json RecommendationService::tags() const {
  const auto rec = model();
  Json out = Json::array();
  const auto& tags = rec->tags();
  for (std::size_t k = 0; k < tags.num_tags(); ++k) {
    out.push_back({{"tag", k}, {"category", tags.vocabulary[k].category},
                   {"label", tags.vocabulary[k].label}});
  }
  return out;
}

std::size_t RecommendationService::replay(std::istream& log) {
  const auto rec = model();
  std::string line;
  std::size_t applied = 0, lineno = 0;
  while (std::getline(log, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json e;
    try {
      e = Json::parse(line);
    } catch (const Json::exception& ex) {
      throw ValidationError("session log line " + std::to_string(lineno) + ": " + ex.what());
    }
    try {
      const std::string kind = e.at("event");
      const std::string id = e.at("session");
      if (kind == "create") {
        auto session = std::make_shared<Session>();
        session->state = rec->empty_state();
        session->created = session->updated = std::chrono::system_clock::now();
        std::unique_lock lock(sessions_mutex_);
        if (!sessions_.emplace(id, session).second) {
          throw ValidationError("session " + id + " created twice");
        }
      } else {
        const auto s = find(id);
        std::lock_guard lock(s->mutex);
        if (kind == "add") {
          s->state = tease::add_history(s->state, item_index(*rec, e.at("item_id")));
        } else if (kind == "remove") {
          s->state = tease::remove_history(s->state, item_index(*rec, e.at("item_id")));
        } else if (kind == "feedback") {
          s->state = apply_feedback(s->state, e.at("tag_id").get<std::size_t>(),
                                    e.at("delta").get<int>());
        } else {
          throw ValidationError("unknown event \"" + kind + "\"");
        }
      }
    } catch (const Json::exception& ex) {
      throw ValidationError("session log line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const std::runtime_error& ex) {
      throw ValidationError("session log line " + std::to_string(lineno) + ": " + ex.what());
    }
    ++applied;
  }
  return applied;
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  explicit Impl(RecommendationService& s) : service(s) {}
  RecommendationService& service;
  httplib::Server server;
  int port = -1;
};

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ValidationError& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const NotFoundError& e) {
      send_json(res, {{"error", e.what()}}, 404);
    } catch (const UnavailableError& e) {
      send_json(res, {{"error", e.what()}}, 503);
    } catch (const Json::exception& e) {
      send_json(res, {{"error", std::string("bad request body: ") + e.what()}}, 400);
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

Json body_of(const httplib::Request& req) {
  if (req.body.empty()) throw ValidationError("request body is empty");
  return Json::parse(req.body);
}

std::size_t parse_count(const std::string& text, const char* name) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text[0] == '-') {
    throw ValidationError(std::string(name) + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

bool parse_flag(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("ensemble must be true or false");
}

}  // namespace

HttpServer::HttpServer(RecommendationService& service)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& s = impl_->server;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Post("/sessions", guarded([&svc](const httplib::Request&, httplib::Response& res) {
           send_json(res, {{"session_id", svc.create_session()}}, 201);
         }));
  s.Get(R"(/sessions/([^/]+)/profile)",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, svc.profile(req.matches[1]));
        }));
  s.Post(R"(/sessions/([^/]+)/history)",
         guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_of(req);
           send_json(res, svc.add_history(req.matches[1], body.at("item_id").get<std::string>()));
         }));
  s.Delete(R"(/sessions/([^/]+)/history/(.+))",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, svc.remove_history(req.matches[1], req.matches[2]));
           }));
  s.Post(R"(/sessions/([^/]+)/feedback)",
         guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const Json body = body_of(req);
           const Json& tag = body.at("tag_id");
           if (!tag.is_number_unsigned()) throw ValidationError("tag_id must be a tag index");
           send_json(res, svc.post_feedback(req.matches[1], tag.get<std::size_t>(),
                                            body.at("direction").get<std::string>()));
         }));
  s.Get(R"(/sessions/([^/]+)/recommendations)",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          const std::size_t k =
              req.has_param("k") ? parse_count(req.get_param_value("k"), "k") : 20;
          const bool ensemble =
              req.has_param("ensemble") && parse_flag(req.get_param_value("ensemble"));
          send_json(res, svc.recommendations(req.matches[1], k, ensemble));
        }));
  s.Get(R"(/items/(.+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, svc.item(req.matches[1]));
        }));
  s.Get("/tags", guarded([&svc](const httplib::Request&, httplib::Response& res) {
          send_json(res, svc.tags());
        }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) {
    throw ResourceError("cannot bind " + host + ":" + std::to_string(port));
  }
  return impl_->port;
}

void HttpServer::listen() {
  if (impl_->port < 0) throw ValidationError("bind() before listen()");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace tease
