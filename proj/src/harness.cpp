#include "mindhunt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

namespace mindhunt {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json cell_json(Cell c) { return json::array({c.row, c.col}); }

Cell cell_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

json query_json(const std::optional<WizardQuery>& q) {
  if (!q) return nullptr;
  return {{"wizard", q->wizard}, {"yielded", q->yielded}};
}

std::optional<WizardQuery> query_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return WizardQuery{j.at("wizard").get<int>(), j.at("yielded").get<bool>()};
}

Action action_from(const json& j) {
  auto a = parse_action(j.get<std::string>());
  if (!a) throw Error("unknown action in log: " + j.get<std::string>());
  return *a;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

json EpisodeConfig::to_json() const {
  json j;
  j["costs"] = mindhunt::to_json(costs);
  j["beta"] = beta;
  j["npc_beta"] = npc_beta ? json(*npc_beta) : json(nullptr);
  j["step_limit"] = step_limit;
  j["seed"] = seed;
  j["record_posterior"] = record_posterior;
  return j;
}

EpisodeConfig EpisodeConfig::from_json(const json& j) {
  EpisodeConfig c;
  try {
    if (j.contains("costs")) c.costs = costs_from_json(j.at("costs"));
    c.beta = j.value("beta", c.beta);
    if (j.contains("npc_beta") && !j.at("npc_beta").is_null()) c.npc_beta = j.at("npc_beta").get<double>();
    c.step_limit = j.value("step_limit", c.step_limit);
    c.seed = j.value("seed", c.seed);
    c.record_posterior = j.value("record_posterior", c.record_posterior);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed episode config: ") + e.what());
  }
  if (!(c.beta > 0.0)) throw Error("malformed episode config: beta must be positive");
  if (c.npc_beta && !(*c.npc_beta > 0.0)) throw Error("malformed episode config: npc_beta must be positive");
  if (c.step_limit < 0) throw Error("malformed episode config: negative step limit");
  return c;
}

std::string EpisodeConfig::hash() const { return hex64(fnv1a(to_json().dump())); }

OptimalNpc::OptimalNpc(Planner& planner, const GameMap& map)
    : planner_(&planner), truth_{map.goal(Agent::Other), map.true_assignment_index()} {}

Action OptimalNpc::next_action(const WorldState& state) {
  return npc_optimal_action(*planner_, npc_view(state), truth_);
}

NoisyNpc::NoisyNpc(Planner& planner, const GameMap& map, double beta, std::uint64_t seed)
    : planner_(&planner), truth_{map.goal(Agent::Other), map.true_assignment_index()}, beta_(beta), rng_(seed) {}

Action NoisyNpc::next_action(const WorldState& state) {
  const NpcView view = npc_view(state);
  const ColorSet held = planner_->held_under(truth_.assignment, view.queried);
  const auto p = boltzmann_policy(planner_->known_q_values(truth_.goal, view.position, held, truth_.assignment), beta_);
  // Inverse-CDF draw keeps the sequence independent of the library's distribution code.
  const double u = std::generate_canonical<double, 53>(rng_);
  double acc = 0.0;
  for (Action a : kMoves) {
    acc += p[static_cast<int>(a)];
    if (u < acc) return a;
  }
  return argmin_action(planner_->known_q_values(truth_.goal, view.position, held, truth_.assignment));
}

Action ScriptedNpc::next_action(const WorldState&) {
  if (next_ >= actions_.size()) throw Error("log has no recorded move for the other agent");
  return actions_[next_++];
}

namespace {

/// Remembers the action the wrapped policy chose last.
class RecordingNpc final : public NpcPolicy {
 public:
  RecordingNpc(NpcPolicy& inner, Action& last) : inner_(&inner), last_(&last) {}
  Action next_action(const WorldState& state) override { return *last_ = inner_->next_action(state); }

 private:
  NpcPolicy* inner_;
  Action* last_;
};

json step_json(const StepRecord& r) {
  json j;
  j["turn"] = r.turn;
  j["actor"] = "main";
  j["action"] = to_string(r.action);
  if (r.npc_step) {
    j["npc"] = {{"action", to_string(r.npc_step->action)},
                {"to", cell_json(r.npc_step->to)},
                {"query", query_json(r.npc_step->query)},
                {"reached_goal", r.npc_step->reached_goal}};
  } else {
    j["npc"] = nullptr;
  }
  j["own_query"] = query_json(r.own_query);
  j["decision"] = r.decision;
  j["cumulative_cost"] = r.cumulative_cost;
  j["digest"] = r.digest;
  return j;
}

StepRecord step_from(const json& j) {
  StepRecord r;
  r.turn = j.at("turn").get<int>();
  r.action = action_from(j.at("action"));
  if (!j.at("npc").is_null()) {
    const json& n = j.at("npc");
    r.npc_step = NpcStep{action_from(n.at("action")), cell_from(n.at("to")), query_from(n.at("query")),
                         n.at("reached_goal").get<bool>()};
  }
  r.own_query = query_from(j.at("own_query"));
  r.decision = j.value("decision", json::object());
  r.cumulative_cost = j.at("cumulative_cost").get<double>();
  r.digest = j.at("digest").get<std::string>();
  return r;
}

}  // namespace

json EpisodeLog::to_json() const {
  json j;
  j["map"] = map_name;
  j["model"] = model;
  j["config"] = config.to_json();
  j["config_hash"] = config.hash();
  j["seed"] = config.seed;
  j["map_document"] = map_document;
  j["initial_digest"] = initial_digest;
  json recs = json::array();
  for (const auto& r : records) recs.push_back(step_json(r));
  j["records"] = std::move(recs);
  j["summary"] = {{"steps", summary.steps},
                  {"moves", summary.moves},
                  {"observes", summary.observes},
                  {"cost", summary.cost},
                  {"goal_achieved", summary.goal_achieved},
                  {"step_limit_hit", summary.step_limit_hit}};
  return j;
}

EpisodeLog EpisodeLog::from_json(const json& j) {
  EpisodeLog log;
  try {
    log.map_name = j.at("map").get<std::string>();
    log.model = j.at("model").get<std::string>();
    log.config = EpisodeConfig::from_json(j.at("config"));
    log.map_document = j.at("map_document");
    log.initial_digest = j.at("initial_digest").get<std::string>();
    for (const json& r : j.at("records")) log.records.push_back(step_from(r));
    const json& s = j.at("summary");
    log.summary.steps = s.at("steps").get<int>();
    log.summary.moves = s.at("moves").get<int>();
    log.summary.observes = s.at("observes").get<int>();
    log.summary.cost = s.at("cost").get<double>();
    log.summary.goal_achieved = s.at("goal_achieved").get<bool>();
    log.summary.step_limit_hit = s.at("step_limit_hit").get<bool>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed episode log: ") + e.what());
  }
  return log;
}

json decision_json(const ObserverDecision& d, int t, const std::string& model) {
  json j;
  j["t"] = t;
  j["model"] = model;
  j["action"] = to_string(d.action);
  j["U_obs"] = d.u_obs ? json(*d.u_obs) : json(nullptr);
  j["U_act"] = d.u_act ? json(*d.u_act) : json(nullptr);
  j["T_star"] = d.t_star;
  // JSON has no infinity; a KL that rules out an assignment is written as "inf".
  if (d.info_gain) j["info_gain"] = std::isfinite(*d.info_gain) ? json(*d.info_gain) : json("inf");
  return j;
}

EpisodeRunner::EpisodeRunner(const GameMap& map, std::string model, const EpisodeConfig& config)
    : map_(map), config_(config), planner_(map, config.costs), state_(initial_state(map)) {
  config_.costs.validate();
  if (config_.npc_beta) {
    npc_ = std::make_unique<NoisyNpc>(planner_, map_, *config_.npc_beta, config_.seed);
  } else {
    npc_ = std::make_unique<OptimalNpc>(planner_, map_);
  }
  social_ = init_posterior(map_);
  // An active agent standing on a chest is not headed there.
  const AgentState& other = state_.agent(Agent::Other);
  if (!other.done) {
    if (auto c = map_.chest_at(other.position)) {
      for (std::size_t i = 0; i < social_.probs.size(); ++i) {
        if (social_.hypotheses[i].goal == *c) social_.probs[i] = 0.0;
      }
      normalize(social_.probs);
    }
  }
  evidence_ = social_;
  log_.map_name = map_.name();
  log_.model = std::move(model);
  log_.config = config_;
  log_.map_document = map_to_json(map_, true);
  log_.initial_digest = state_digest(state_);
  last_obs_ = observe(state_, map_, Agent::Main);
  finish(false);
}

Situation EpisodeRunner::situation() {
  return Situation{map_, state_, config_.costs, planner_, social_, evidence_, config_.beta};
}

const Observation& EpisodeRunner::apply(Action action, json decision) {
  const NpcView before = npc_view(state_);
  RecordingNpc recorder(*npc_, last_npc_action_);
  StepResult r = step(state_, map_, config_.costs, action, recorder);

  StepRecord rec;
  rec.turn = state_.turn;
  rec.action = action;
  if (action == Action::Observe) {
    const AgentState& other = r.state.agent(Agent::Other);
    NpcStep ns{last_npc_action_, other.position, other.last_query, other.done && !before.done};
    social_ = update_posterior(social_, planner_, before, ns, config_.beta);
    evidence_ = apply_hard_evidence(evidence_, map_, before, ns);
    rec.npc_step = ns;
  }
  rec.own_query = r.state.agent(Agent::Main).last_query;
  rec.decision = std::move(decision);
  rec.cumulative_cost = r.state.agent(Agent::Main).points_spent;
  rec.digest = state_digest(r.state);
  log_.records.push_back(std::move(rec));

  state_ = std::move(r.state);
  last_obs_ = std::move(r.observation);
  finish(false);
  return last_obs_;
}

void EpisodeRunner::finish(bool step_limit_hit) {
  const AgentState& m = state_.agent(Agent::Main);
  log_.summary.steps = static_cast<int>(log_.records.size());
  log_.summary.moves = m.moves;
  log_.summary.observes = m.observes;
  log_.summary.cost = m.points_spent;
  log_.summary.goal_achieved = m.done;
  log_.summary.step_limit_hit = step_limit_hit;
}

EpisodeLog run_episode(const GameMap& map, Observer& observer, const EpisodeConfig& config) {
  EpisodeRunner runner(map, observer.name(), config);
  const bool mentalizing = observer.name() == "rational_mentalizing" || observer.name() == "social_mentalizing";
  while (!runner.done()) {
    if (static_cast<int>(runner.log().records.size()) >= config.step_limit) {
      runner.finish(true);
      break;
    }
    const Situation s = runner.situation();
    const ObserverDecision d = observer.decide(s);
    json dj = decision_json(d, s.state.turn, observer.name());
    if (config.record_posterior) {
      dj["posterior"] = to_json(mentalizing ? runner.social() : runner.evidence(), map);
    }
    runner.apply(d.action, std::move(dj));
  }
  return runner.log();
}

EpisodeLog run_episode(const GameMap& map, std::string_view model, const EpisodeConfig& config) {
  auto observer = make_observer(model);
  return run_episode(map, *observer, config);
}

ReplayResult replay(const EpisodeLog& log) {
  ReplayResult out;
  const GameMap map = load_map(log.map_document);
  std::vector<Action> npc_moves;
  for (const auto& r : log.records) {
    if (r.npc_step) npc_moves.push_back(r.npc_step->action);
  }
  ScriptedNpc npc(std::move(npc_moves));
  WorldState state = initial_state(map);
  out.states.push_back(state);
  auto fail = [&](std::string msg) {
    out.ok = false;
    out.message = std::move(msg);
    return out;
  };
  if (state_digest(state) != log.initial_digest) return fail("initial state digest mismatch");
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const StepRecord& r = log.records[i];
    try {
      state = step(state, map, log.config.costs, r.action, npc).state;
    } catch (const Error& e) {
      return fail("record " + std::to_string(i) + ": " + e.what());
    }
    out.states.push_back(state);
    if (state_digest(state) != r.digest) return fail("digest mismatch at record " + std::to_string(i));
    if (state.agent(Agent::Main).points_spent != r.cumulative_cost) {
      return fail("cumulative cost mismatch at record " + std::to_string(i));
    }
  }
  // Totals must equal the sums of the per-step entries.
  int moves = 0;
  int observes = 0;
  double cost = 0.0;
  for (const auto& r : log.records) {
    (r.action == Action::Observe ? observes : moves) += 1;
    cost += log.config.costs.cost_of(r.action);
  }
  const AgentState& m = state.agent(Agent::Main);
  if (log.summary.steps != static_cast<int>(log.records.size()) || log.summary.moves != moves ||
      log.summary.observes != observes || log.summary.cost != cost || m.points_spent != cost ||
      log.summary.goal_achieved != m.done) {
    return fail("summary does not match the records");
  }
  return out;
}

std::string render_ascii(const GameMap& map, const WorldState& state) {
  std::ostringstream os;
  const Cell me = state.agent(Agent::Main).position;
  const Cell other = state.agent(Agent::Other).position;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const Cell cell{r, c};
      char ch = '.';
      if (map.is_wall(cell)) {
        ch = '#';
      } else if (auto w = map.wizard_at(cell)) {
        ch = map.wizard(*w).color == Color::Blue ? 'b' : 'r';
      } else if (auto b = map.barrier_at(cell)) {
        ch = *b == Color::Blue ? '=' : '~';
      } else if (auto l = map.chest_at(cell)) {
        ch = to_string(*l)[0];
      }
      if (cell == me && cell == other) {
        ch = '*';
      } else if (cell == me) {
        ch = '@';
      } else if (cell == other) {
        ch = '&';
      }
      os << ch;
    }
    os << '\n';
  }
  const AgentState& m = state.agent(Agent::Main);
  os << "turn " << state.turn << "  spent " << m.points_spent << "  observes " << m.observes << "/"
     << kObservationCap << (m.done ? "  done" : "") << '\n';
  return os.str();
}

json CorpusSpec::to_json() const {
  return {{"map_count", map_count},
          {"size", {size.first, size.second}},
          {"blue_wizards", {blue_wizards.first, blue_wizards.second}},
          {"red_wizards", {red_wizards.first, red_wizards.second}},
          {"chest_count", chest_count},
          {"wall_density", wall_density},
          {"barriers", barriers},
          {"min_wizard_gap", min_wizard_gap},
          {"goal_scheme", goal_scheme},
          {"seed", seed},
          {"paired", paired}};
}

CorpusSpec CorpusSpec::from_json(const json& j) {
  CorpusSpec s;
  auto range = [&](const char* key, std::pair<int, int>& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_number_integer()) {
      out = {v.get<int>(), v.get<int>()};
    } else {
      out = {v.at(0).get<int>(), v.at(1).get<int>()};
    }
  };
  try {
    if (!j.is_object()) throw Error("corpus spec must be an object");
    s.map_count = j.value("map_count", s.map_count);
    range("size", s.size);
    range("blue_wizards", s.blue_wizards);
    range("red_wizards", s.red_wizards);
    s.chest_count = j.value("chest_count", s.chest_count);
    s.wall_density = j.value("wall_density", s.wall_density);
    s.min_wizard_gap = j.value("min_wizard_gap", s.min_wizard_gap);
    if (j.contains("barriers")) s.barriers = j.at("barriers").get<std::vector<std::string>>();
    s.goal_scheme = j.value("goal_scheme", s.goal_scheme);
    s.seed = j.value("seed", s.seed);
    s.paired = j.value("paired", s.paired);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed corpus spec: ") + e.what());
  }
  auto bad_range = [](std::pair<int, int> r, int lo) { return r.first < lo || r.second < r.first; };
  if (s.map_count < 1) throw Error("malformed corpus spec: map_count must be >= 1");
  if (bad_range(s.size, 7) || s.size.second > 64) throw Error("malformed corpus spec: size range must lie in [7, 64]");
  if (bad_range(s.blue_wizards, 0) || bad_range(s.red_wizards, 0)) {
    throw Error("malformed corpus spec: wizard ranges must be nonempty and nonnegative");
  }
  if (s.chest_count < 1 || s.chest_count > 3) throw Error("malformed corpus spec: chest_count must be 1..3");
  if (!(s.wall_density >= 0.0 && s.wall_density < 0.5)) {
    throw Error("malformed corpus spec: wall_density must be in [0, 0.5)");
  }
  if (static_cast<int>(s.barriers.size()) < s.chest_count) {
    throw Error("malformed corpus spec: need one barrier entry per chest");
  }
  for (const auto& b : s.barriers) {
    if (b != "none" && !parse_color(b)) throw Error("malformed corpus spec: unknown barrier \"" + b + "\"");
  }
  if (s.min_wizard_gap < 1) throw Error("malformed corpus spec: min_wizard_gap must be >= 1");
  if (s.goal_scheme != "uniform" && s.goal_scheme != "uncertain") {
    throw Error("malformed corpus spec: goal_scheme must be \"uniform\" or \"uncertain\"");
  }
  return s;
}

namespace {

constexpr int kMaxRejections = 10000;

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// One random layout attempt. Chests sit in one-cell pockets on the top or
/// bottom edge whose only entry is the barrier.
std::optional<GameMap> try_layout(const CorpusSpec& spec, std::mt19937_64& rng, const std::string& name) {
  const int n = uniform(rng, spec.size.first, spec.size.second);
  MapLayout l;
  l.name = name;
  l.width = n;
  l.height = n;
  l.walls.assign(n * n, false);
  auto at = [&](Cell c) { return c.row * n + c.col; };
  for (int i = 0; i < n; ++i) {
    l.walls[at({0, i})] = l.walls[at({n - 1, i})] = true;
    l.walls[at({i, 0})] = l.walls[at({i, n - 1})] = true;
  }
  std::vector<bool> reserved(n * n, false);

  std::vector<Cell> sites;
  for (int attempt = 0; attempt < 50 && static_cast<int>(sites.size()) < spec.chest_count; ++attempt) {
    const int row = uniform(rng, 0, 1) == 0 ? 1 : n - 2;
    const Cell c{row, uniform(rng, 2, n - 3)};
    const bool clash = std::any_of(sites.begin(), sites.end(),
                                   [&](Cell s) { return s.row == c.row && std::abs(s.col - c.col) < 3; });
    if (!clash) sites.push_back(c);
  }
  if (static_cast<int>(sites.size()) < spec.chest_count) return std::nullopt;

  // One red-barred chest, the rest blue; labels shuffled over sites.
  std::vector<ChestLabel> labels(kChestLabels.begin(), kChestLabels.begin() + spec.chest_count);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (int i = 0; i < spec.chest_count; ++i) {
    const Cell chest = sites[i];
    const int inward = chest.row == 1 ? 1 : -1;
    const Cell barrier{chest.row + inward, chest.col};
    const Cell entry{barrier.row + inward, chest.col};
    for (int dc : {-1, 1}) {
      l.walls[at({chest.row, chest.col + dc})] = true;
      l.walls[at({barrier.row, chest.col + dc})] = true;
    }
    for (Cell c : {chest, barrier, entry}) reserved[at(c)] = true;
    if (spec.barriers[i] != "none") l.barriers.push_back({barrier, *parse_color(spec.barriers[i])});
    l.chests.push_back({chest, labels[i]});
  }

  for (int r = 1; r < n - 1; ++r) {
    for (int c = 1; c < n - 1; ++c) {
      if (!reserved[at({r, c})] && !l.walls[at({r, c})] &&
          std::generate_canonical<double, 53>(rng) < spec.wall_density) {
        l.walls[at({r, c})] = true;
      }
    }
  }

  std::vector<Cell> free;
  for (int r = 1; r < n - 1; ++r) {
    for (int c = 1; c < n - 1; ++c) {
      if (!reserved[at({r, c})] && !l.walls[at({r, c})]) free.push_back({r, c});
    }
  }
  std::shuffle(free.begin(), free.end(), rng);

  std::vector<Cell> taken;
  auto pick = [&](int min_gap) -> std::optional<Cell> {
    for (Cell c : free) {
      if (std::all_of(taken.begin(), taken.end(), [&](Cell t) { return manhattan(c, t) >= min_gap; })) {
        taken.push_back(c);
        return c;
      }
    }
    return std::nullopt;
  };
  const int blues = uniform(rng, spec.blue_wizards.first, spec.blue_wizards.second);
  const int reds = uniform(rng, spec.red_wizards.first, spec.red_wizards.second);
  for (int i = 0; i < blues + reds; ++i) {
    auto c = pick(spec.min_wizard_gap);
    if (!c) return std::nullopt;
    l.wizard_cells.push_back(*c);
    l.wizard_colors.push_back(i < blues ? Color::Blue : Color::Red);
  }
  auto main_start = pick(2);
  if (!main_start) return std::nullopt;
  std::optional<Cell> other_start;
  for (Cell c : free) {
    if (manhattan(c, *main_start) >= 4 &&
        std::all_of(taken.begin(), taken.end(), [&](Cell t) { return manhattan(c, t) >= 2; })) {
      other_start = c;
      break;
    }
  }
  if (!other_start) return std::nullopt;
  l.starts = {*main_start, *other_start};

  // Wizard ids follow (row, col) order.
  std::vector<std::size_t> order(l.wizard_cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return l.wizard_cells[a] < l.wizard_cells[b]; });
  std::vector<int> id_of(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) id_of[order[k]] = static_cast<int>(k);
  for (Color color : kColors) {
    std::vector<int> ids;
    for (std::size_t i = 0; i < l.wizard_cells.size(); ++i) {
      if (l.wizard_colors[i] == color) ids.push_back(id_of[i]);
    }
    if (!ids.empty()) l.amulet_holders[static_cast<int>(color)] = {ids[uniform(rng, 0, static_cast<int>(ids.size()) - 1)]};
  }
  std::vector<ChestLabel> goal_pool;
  for (int i = 0; i < spec.chest_count; ++i) {
    const auto color = parse_color(spec.barriers[i]);
    const int candidates = !color ? 0 : *color == Color::Red ? reds : blues;
    if (spec.goal_scheme == "uniform" || candidates >= 2) goal_pool.push_back(labels[i]);
  }
  if (goal_pool.empty()) return std::nullopt;
  l.goals[0] = goal_pool[uniform(rng, 0, static_cast<int>(goal_pool.size()) - 1)];
  l.goals[1] = l.goals[0];

  GameMap map = GameMap::create(l);
  // Every open cell must be reachable once all barriers are open.
  const auto reach = flood_fill(map, map.start(Agent::Main), ColorSet::all());
  for (int i = 0; i < n * n; ++i) {
    if (!l.walls[i] && !reach[i]) return std::nullopt;
  }
  return map;
}

}  // namespace

std::vector<GameMap> generate_corpus(const CorpusSpec& spec) {
  std::vector<GameMap> out;
  for (int i = 0; i < spec.map_count; ++i) {
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(i) + 1);
    char base[32];
    std::snprintf(base, sizeof base, "corpus_%03d", i);
    std::optional<GameMap> map;
    std::string last_error = "layout constraints";
    for (int attempt = 0; attempt < kMaxRejections && !map; ++attempt) {
      try {
        map = try_layout(spec, rng, base);
      } catch (const MapError& e) {
        last_error = e.what();
      }
    }
    if (!map) {
      throw Error("generation budget exceeded for map " + std::to_string(i) + " after " +
                  std::to_string(kMaxRejections) + " rejections (last: " + last_error + ")");
    }
    const ChestLabel goal = map->goal(Agent::Main);
    if (!spec.paired) {
      const ChestLabel other = map->chests()[uniform(rng, 0, spec.chest_count - 1)].label;
      out.push_back(map->with_scenario(base, {goal, other}, map->true_assignment()));
      continue;
    }
    std::vector<ChestLabel> others;
    for (const Chest& c : map->chests()) {
      if (c.label != goal) others.push_back(c.label);
    }
    out.push_back(map->with_scenario(std::string(base) + "_same", {goal, goal}, map->true_assignment()));
    if (others.empty()) throw Error("paired corpus needs at least two chests");
    const ChestLabel other = others[uniform(rng, 0, static_cast<int>(others.size()) - 1)];
    out.push_back(map->with_scenario(std::string(base) + "_diff", {goal, other}, map->true_assignment()));
  }
  return out;
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

int default_thread_count() {
  if (const char* env = std::getenv("MINDHUNT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

std::string EvaluationResult::summary_csv() const {
  std::string out = "model,episodes,mean_steps,se_steps,mean_cost,se_cost,mean_observes,goal_rate\n";
  for (const auto& m : models) {
    out += m.model + "," + std::to_string(m.episodes) + "," + fixed4(m.mean_steps) + "," + fixed4(m.se_steps) + "," +
           fixed4(m.mean_cost) + "," + fixed4(m.se_cost) + "," + fixed4(m.mean_observes) + "," +
           fixed4(m.goal_rate) + "\n";
  }
  return out;
}

namespace {

struct MapModelMeans {
  std::string map;
  std::string model;
  int episodes = 0;
  double steps = 0.0;
  double cost = 0.0;
  double observes = 0.0;
};

std::vector<MapModelMeans> per_map_means(const std::vector<EpisodeRow>& rows) {
  std::vector<MapModelMeans> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().map != r.map || out.back().model != r.model) out.push_back({r.map, r.model});
    MapModelMeans& m = out.back();
    ++m.episodes;
    m.steps += r.summary.steps;
    m.cost += r.summary.cost;
    m.observes += r.summary.observes;
  }
  for (auto& m : out) {
    m.steps /= m.episodes;
    m.cost /= m.episodes;
    m.observes /= m.episodes;
  }
  return out;
}

}  // namespace

std::string EvaluationResult::per_map_csv() const {
  std::string out = "map,model,episodes,mean_steps,mean_cost,mean_observes\n";
  for (const auto& m : per_map_means(episodes)) {
    out += m.map + "," + m.model + "," + std::to_string(m.episodes) + "," + fixed4(m.steps) + "," + fixed4(m.cost) +
           "," + fixed4(m.observes) + "\n";
  }
  return out;
}

json EvaluationResult::to_json() const {
  json j;
  j["models"] = json::array();
  for (const auto& m : models) {
    j["models"].push_back({{"model", m.model},
                           {"episodes", m.episodes},
                           {"mean_steps", m.mean_steps},
                           {"se_steps", m.se_steps},
                           {"mean_cost", m.mean_cost},
                           {"se_cost", m.se_cost},
                           {"mean_observes", m.mean_observes},
                           {"goal_rate", m.goal_rate},
                           {"max_observes", m.max_observes}});
  }
  j["per_map"] = json::array();
  for (const auto& m : per_map_means(episodes)) {
    j["per_map"].push_back({{"map", m.map},
                            {"model", m.model},
                            {"episodes", m.episodes},
                            {"mean_steps", m.steps},
                            {"mean_cost", m.cost},
                            {"mean_observes", m.observes}});
  }
  j["episodes"] = json::array();
  for (const auto& e : episodes) {
    j["episodes"].push_back({{"map", e.map},
                             {"model", e.model},
                             {"seed", e.seed},
                             {"steps", e.summary.steps},
                             {"cost", e.summary.cost},
                             {"observes", e.summary.observes},
                             {"goal_achieved", e.summary.goal_achieved},
                             {"step_limit_hit", e.summary.step_limit_hit}});
  }
  return j;
}

EvaluationResult evaluate(const std::vector<GameMap>& corpus, const std::vector<std::string>& models,
                          const EvaluationOptions& options) {
  if (corpus.empty()) throw Error("evaluate needs at least one map");
  if (models.empty()) throw Error("evaluate needs at least one model");
  if (options.seeds < 1) throw Error("evaluate needs at least one seed");
  for (const auto& m : models) make_observer(m);  // validates names up front

  struct Job {
    std::size_t map;
    std::size_t model;
    int seed;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      for (int s = 0; s < options.seeds; ++s) jobs.push_back({i, m, s});
    }
  }
  std::vector<EpisodeLog> logs(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::mutex error_mutex;
  std::string error;
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      EpisodeConfig cfg = options.config;
      cfg.seed = options.config.seed + static_cast<std::uint64_t>(job.seed);
      try {
        logs[k] = run_episode(corpus[job.map], models[job.model], cfg);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (error.empty()) error = corpus[job.map].name() + "/" + models[job.model] + ": " + e.what();
      }
      const std::size_t done = ++finished;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(done, jobs.size());
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads > 0 ? options.threads : default_thread_count(),
                                                static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!error.empty()) throw Error("episode failed: " + error);

  EvaluationResult result;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    result.episodes.push_back({corpus[jobs[k].map].name(), models[jobs[k].model], logs[k].config.seed,
                               logs[k].summary});
  }
  for (const auto& name : models) {
    std::vector<double> steps;
    std::vector<double> costs;
    ModelSummary s;
    s.model = name;
    double observes = 0.0;
    double goals = 0.0;
    for (const auto& e : result.episodes) {
      if (e.model != name) continue;
      steps.push_back(e.summary.steps);
      costs.push_back(e.summary.cost);
      observes += e.summary.observes;
      goals += e.summary.goal_achieved ? 1.0 : 0.0;
      s.max_observes = std::max(s.max_observes, e.summary.observes);
    }
    s.episodes = static_cast<int>(steps.size());
    std::tie(s.mean_steps, s.se_steps) = mean_and_se(steps);
    std::tie(s.mean_cost, s.se_cost) = mean_and_se(costs);
    s.mean_observes = observes / s.episodes;
    s.goal_rate = goals / s.episodes;
    result.models.push_back(s);
  }
  if (options.keep_logs) result.logs = std::move(logs);
  return result;
}

}  // namespace mindhunt
