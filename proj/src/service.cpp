#include "mindhunt/service.hpp"

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <random>

#include <httplib.h>

namespace mindhunt {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

ServiceError not_found(const std::string& what) { return {404, "not_found", what}; }
ServiceError bad_request(const std::string& what) { return {400, "bad_request", what}; }

std::string random_token() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

json npc_step_json(const std::optional<NpcStep>& s) {
  if (!s) return nullptr;
  json j{{"action", to_string(s->action)}, {"to", {s->to.row, s->to.col}}, {"reached_goal", s->reached_goal}};
  j["query"] = s->query ? json{{"wizard", s->query->wizard}, {"yielded", s->query->yielded}} : json(nullptr);
  return j;
}

json history_json(const EpisodeLog& log) {
  json h = json::array();
  for (const auto& r : log.records) {
    json e{{"turn", r.turn}, {"action", to_string(r.action)}, {"cumulative_cost", r.cumulative_cost}};
    e["npc"] = npc_step_json(r.npc_step);
    e["own_query"] = r.own_query ? json{{"wizard", r.own_query->wizard}, {"yielded", r.own_query->yielded}}
                                 : json(nullptr);
    h.push_back(std::move(e));
  }
  return h;
}

}  // namespace

SessionStore::SessionStore(ServiceOptions options) : options_(std::move(options)) {
  make_observer(options_.advisor);
  if (options_.maps_dir.empty()) return;
  if (!fs::is_directory(options_.maps_dir)) throw Error("maps directory not found: " + options_.maps_dir);
  for (const auto& e : fs::directory_iterator(options_.maps_dir)) {
    if (e.path().extension() != ".json") continue;
    GameMap m = load_map_file(e.path().string());
    const std::string name = m.name();
    fixtures_.insert_or_assign(name, std::move(m));
  }
  if (!options_.log_dir.empty()) fs::create_directories(options_.log_dir);
}

SessionStore::~SessionStore() = default;

std::vector<std::string> SessionStore::map_names() const {
  std::vector<std::string> out;
  for (const auto& [name, m] : fixtures_) out.push_back(name);
  return out;
}

json SessionStore::list_maps() const {
  json maps = json::array();
  for (const auto& [name, m] : fixtures_) {
    maps.push_back({{"name", name}, {"width", m.width()}, {"height", m.height()}, {"goal", to_string(m.goal(Agent::Main))}});
  }
  return {{"maps", maps}};
}

void SessionStore::sweep() {
  const auto now = Clock::now();
  for (auto& [id, s] : sessions_) {
    std::unique_lock lock(s->busy, std::try_to_lock);
    if (!lock || s->expired) continue;
    if (now - s->last_active > options_.idle_timeout) {
      s->expired = true;
      s->runner.reset();
      s->map.reset();
    }
  }
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw not_found("unknown session: " + id);
  return it->second;
}

void SessionStore::lock_session(Session& s) {
  if (!s.busy.try_lock()) throw ServiceError(409, "conflict", "another action is in progress for this session");
  if (!s.expired && Clock::now() - s.last_active > options_.idle_timeout) {
    s.expired = true;
    s.runner.reset();
    s.map.reset();
  }
  if (s.expired) {
    s.busy.unlock();
    throw ServiceError(410, "expired", "session expired after inactivity");
  }
}

json SessionStore::create(const json& body) {
  if (!body.is_object()) throw bad_request("request body must be a JSON object");
  auto s = std::make_shared<Session>();
  if (body.contains("map_document")) {
    try {
      s->map = std::make_unique<GameMap>(load_map(body.at("map_document")));
    } catch (const MapError& e) {
      throw bad_request(e.what());
    }
  } else if (body.contains("map") && body.at("map").is_string()) {
    auto it = fixtures_.find(body.at("map").get<std::string>());
    if (it == fixtures_.end()) throw not_found("unknown map: " + body.at("map").get<std::string>());
    s->map = std::make_unique<GameMap>(it->second);
  } else {
    throw bad_request("expected \"map\" (fixture name) or \"map_document\"");
  }
  EpisodeConfig config;
  config.record_posterior = false;
  try {
    if (body.contains("costs")) config.costs = costs_from_json(body.at("costs"));
    if (body.contains("seed")) config.seed = body.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw bad_request(std::string("malformed request: ") + e.what());
  } catch (const Error& e) {
    throw bad_request(e.what());
  }
  s->runner = std::make_unique<EpisodeRunner>(*s->map, "human", config);
  s->last_active = Clock::now();
  std::lock_guard lock(mutex_);
  sweep();
  do {
    s->id = random_token();
  } while (sessions_.count(s->id));
  sessions_.emplace(s->id, s);
  return state_json(*s);
}

json SessionStore::state_json(Session& s) const {
  const EpisodeRunner& r = *s.runner;
  const GameMap& map = *s.map;
  const CostConfig& costs = r.log().config.costs;
  json j;
  j["id"] = s.id;
  j["map"] = map.name();
  j["done"] = r.done();
  j["observation"] = to_json(r.last_observation(), map, costs);
  j["points_spent"] = r.state().agent(Agent::Main).points_spent;
  j["points_remaining"] = costs.starting_points - r.state().agent(Agent::Main).points_spent;
  j["costs"] = to_json(costs);
  j["history"] = history_json(r.log());
  if (r.done()) {
    json advice = json::array();
    for (const auto& rec : r.log().records) {
      const json& a = rec.decision.contains("advisor") ? rec.decision.at("advisor") : json(nullptr);
      advice.push_back({{"t", rec.turn},
                        {"action", to_string(rec.action)},
                        {"advisor_action", a.is_null() ? json(nullptr) : a.at("action")},
                        {"U_obs", a.is_null() ? json(nullptr) : a.at("U_obs")},
                        {"U_act", a.is_null() ? json(nullptr) : a.at("U_act")}});
    }
    j["debrief"] = {{"npc_goal", to_string(map.goal(Agent::Other))},
                    {"amulets", assignment_json(map.true_assignment())},
                    {"final_score", costs.starting_points - r.state().agent(Agent::Main).points_spent},
                    {"advisor_model", options_.advisor},
                    {"advisor", advice}};
  }
  return j;
}

json SessionStore::get(const std::string& id) {
  auto s = find(id);
  lock_session(*s);
  std::lock_guard lock(s->busy, std::adopt_lock);
  return state_json(*s);
}

json SessionStore::act(const std::string& id, const json& body) {
  auto s = find(id);
  if (!body.is_object() || !body.contains("action") || !body.at("action").is_string()) {
    throw bad_request("expected {\"action\": \"observe\"|\"up\"|\"down\"|\"left\"|\"right\"}");
  }
  const auto action = parse_action(body.at("action").get<std::string>());
  if (!action) throw bad_request("unknown action: " + body.at("action").get<std::string>());
  lock_session(*s);
  std::lock_guard lock(s->busy, std::adopt_lock);
  EpisodeRunner& r = *s->runner;
  if (r.done()) throw ServiceError(422, "illegal_action", "episode already finished");

  json decision{{"t", r.state().turn}, {"model", "human"}, {"action", to_string(*action)}};
  // What the advisor would have done here, for the debrief.
  try {
    auto advisor = make_observer(options_.advisor);
    decision["advisor"] = decision_json(advisor->decide(r.situation()), r.state().turn, options_.advisor);
  } catch (const Error&) {
    decision["advisor"] = nullptr;
  }
  try {
    r.apply(*action, std::move(decision));
  } catch (const IllegalActionError& e) {
    throw ServiceError(422, "illegal_action", e.what());
  }
  s->last_active = Clock::now();

  if (r.done() && !s->flushed && !options_.log_dir.empty()) {
    std::ofstream out(fs::path(options_.log_dir) / (s->id + ".json"));
    out << r.log().to_json().dump(2) << "\n";
    s->flushed = true;
  }
  json j = state_json(*s);
  const auto& last = r.log().records.back();
  j["step"] = {{"action", to_string(last.action)}, {"npc", npc_step_json(last.npc_step)}};
  return j;
}

json SessionStore::log(const std::string& id) {
  auto s = find(id);
  lock_session(*s);
  std::lock_guard lock(s->busy, std::adopt_lock);
  json j = s->runner->log().to_json();
  if (!s->runner->done()) {
    j["map_document"] = map_to_json(*s->map, false);
    for (auto& rec : j["records"]) rec["decision"].erase("advisor");
  }
  return j;
}

struct HttpService::Impl {
  SessionStore* store;
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    send_json(res, e.status(), {{"error", e.code()}, {"message", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw bad_request(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

HttpService::HttpService(SessionStore& store) : impl_(std::make_unique<Impl>()) {
  impl_->store = &store;
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Get("/maps", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, impl_->store->list_maps()); });
  });
  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, impl_->store->create(parse_body(req))); });
  });
  srv.Get(R"(/sessions/([0-9a-zA-Z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, impl_->store->get(req.matches[1])); });
  });
  srv.Post(R"(/sessions/([0-9a-zA-Z]+)/actions)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, impl_->store->act(req.matches[1], parse_body(req))); });
  });
  srv.Get(R"(/sessions/([0-9a-zA-Z]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, impl_->store->log(req.matches[1])); });
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_json(res, res.status, {{"error", res.status == 404 ? "not_found" : "bad_request"},
                                  {"message", "no such endpoint"}});
    }
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::listen() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

bool run_server(SessionStore& store, const std::string& host, int port) {
  HttpService http(store);
  if (http.bind(host, port) < 0) return false;
  return http.listen();
}

}  // namespace mindhunt
