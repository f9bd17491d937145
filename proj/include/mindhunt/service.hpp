#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindhunt/harness.hpp"

namespace mindhunt {

/// API error carrying the HTTP status and a stable code
/// (not_found, bad_request, illegal_action, conflict, expired).
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceOptions {
  std::string maps_dir;
  std::string log_dir;  // empty: finished logs stay in memory only
  std::chrono::milliseconds idle_timeout{30 * 60 * 1000};
  std::string advisor = "rational_mentalizing";
};

/// Interactive sessions: one human-controlled main agent per session.
/// Thread-safe; actions on one session are serialized and a concurrent
/// second action is rejected with a conflict.
class SessionStore {
 public:
  explicit SessionStore(ServiceOptions options);
  ~SessionStore();

  std::vector<std::string> map_names() const;
  nlohmann::json list_maps() const;

  /// Body: {"map": name} or {"map_document": {...}}, optional "costs", "seed".
  nlohmann::json create(const nlohmann::json& body);
  nlohmann::json get(const std::string& id);
  /// Body: {"action": "observe"|"up"|"down"|"left"|"right"}.
  nlohmann::json act(const std::string& id, const nlohmann::json& body);
  /// Full log after completion; before that, the map document is stripped of hidden information.
  nlohmann::json log(const std::string& id);

  /// Runs `fn` while holding the session's action lock (tests use this to provoke conflicts).
  template <typename F>
  void while_busy(const std::string& id, F&& fn);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);
  void sweep();
  nlohmann::json state_json(Session& s) const;
  void lock_session(Session& s);

  ServiceOptions options_;
  std::map<std::string, GameMap> fixtures_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

/// Blocking HTTP front end over a SessionStore.
class HttpService {
 public:
  explicit HttpService(SessionStore& store);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); returns false on failure.
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

bool run_server(SessionStore& store, const std::string& host, int port);

struct SessionStore::Session {
  std::string id;
  std::unique_ptr<GameMap> map;
  std::unique_ptr<EpisodeRunner> runner;
  std::mutex busy;
  std::chrono::steady_clock::time_point last_active;
  bool expired = false;
  bool flushed = false;
};

template <typename F>
void SessionStore::while_busy(const std::string& id, F&& fn) {
  auto s = find(id);
  std::lock_guard lock(s->busy);
  fn();
}

}  // namespace mindhunt
