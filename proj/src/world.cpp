#include "mindhunt/world.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace mindhunt {

using nlohmann::json;

void CostConfig::validate() const {
  if (!(move_cost > 0) || !(observe_cost > 0) || !(starting_points > 0)) {
    throw Error("malformed costs: all costs must be positive");
  }
  if (!(observe_cost < move_cost)) throw Error("malformed costs: observe_cost must be below move_cost");
}

CostConfig costs_from_json(const json& j) {
  CostConfig c;
  try {
    if (!j.is_object()) throw Error("malformed costs: expected an object");
    c.move_cost = j.value("move_cost", c.move_cost);
    c.observe_cost = j.value("observe_cost", c.observe_cost);
    c.starting_points = j.value("starting_points", c.starting_points);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed costs: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const CostConfig& c) {
  return {{"move_cost", c.move_cost}, {"observe_cost", c.observe_cost}, {"starting_points", c.starting_points}};
}

bool AgentState::has_queried(int wizard) const {
  return std::any_of(queries.begin(), queries.end(), [&](const WizardQuery& q) { return q.wizard == wizard; });
}

std::vector<int> AgentState::queried_ids() const {
  std::vector<int> ids;
  for (const auto& q : queries) ids.push_back(q.wizard);
  std::sort(ids.begin(), ids.end());
  return ids;
}

WorldState initial_state(const GameMap& map) {
  WorldState s;
  for (Agent a : {Agent::Main, Agent::Other}) {
    AgentState& st = s.agent(a);
    st.position = map.start(a);
    st.done = map.chest_at(st.position) == map.goal(a);
  }
  return s;
}

Observation observe(const WorldState& state, const GameMap& map, Agent viewer) {
  (void)map;
  const Agent other = viewer == Agent::Main ? Agent::Other : Agent::Main;
  Observation o;
  o.viewer = viewer;
  o.turn = state.turn;
  o.self = state.agent(viewer);
  o.other_position = state.agent(other).position;
  o.other_done = state.agent(other).done;
  o.other_queried = state.agent(other).queried_ids();
  o.other_query = state.agent(other).last_query;
  return o;
}

std::vector<Action> legal_actions(const WorldState& state, Agent agent) {
  if (state.agent(agent).done) return {};
  std::vector<Action> out(kMoves.begin(), kMoves.end());
  if (agent == Agent::Main && !state.agent(Agent::Other).done && state.observes_used() < kObservationCap) {
    out.push_back(Action::Observe);
  }
  return out;
}

void advance_agent(AgentState& agent, const GameMap& map, Action move, ChestLabel goal) {
  agent.last_query.reset();
  const Cell target = displaced(agent.position, move);
  if (!map.passable(target, agent.amulets)) return;
  agent.position = target;
  if (auto w = map.wizard_at(target); w && !agent.has_queried(*w)) {
    const Wizard& wiz = map.wizard(*w);
    const bool yielded = map.true_assignment().holder_of(wiz.color) == *w;
    if (yielded) agent.amulets = agent.amulets.with(wiz.color);
    agent.queries.push_back({*w, yielded});
    agent.last_query = agent.queries.back();
  }
  if (map.chest_at(target) == goal) agent.done = true;
}

StepResult step(const WorldState& state, const GameMap& map, const CostConfig& costs, Action main_action,
                NpcPolicy& npc) {
  if (state.agent(Agent::Main).done) throw IllegalActionError("illegal action: main agent is already done");
  WorldState next = state;
  AgentState& me = next.agent(Agent::Main);
  AgentState& other = next.agent(Agent::Other);
  me.last_query.reset();
  other.last_query.reset();

  if (main_action == Action::Observe) {
    if (state.agent(Agent::Other).done) throw IllegalActionError("illegal action: other agent has finished");
    if (state.observes_used() >= kObservationCap) {
      throw IllegalActionError("observation budget exhausted");
    }
    const Action npc_action = npc.next_action(state);
    if (!is_move(npc_action)) throw IllegalActionError("illegal action: the other agent cannot observe");
    advance_agent(other, map, npc_action, map.goal(Agent::Other));
    other.moves += 1;
    other.points_spent += costs.move_cost;
    me.observes += 1;
  } else {
    advance_agent(me, map, main_action, map.goal(Agent::Main));
    me.moves += 1;
  }
  me.points_spent += costs.cost_of(main_action);
  next.turn += 1;
  Observation obs = observe(next, map, Agent::Main);
  return {std::move(next), std::move(obs)};
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;
  void add(std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  void add(double v) {
    // Costs are sums of configured values; digest them at fixed precision.
    add(static_cast<std::int64_t>(v * 1e6 + (v >= 0 ? 0.5 : -0.5)));
  }
};

}  // namespace

std::string state_digest(const WorldState& state) {
  Fnv1a f;
  f.add(static_cast<std::int64_t>(state.turn));
  for (const AgentState& a : state.agents) {
    f.add(static_cast<std::int64_t>(a.position.row));
    f.add(static_cast<std::int64_t>(a.position.col));
    f.add(static_cast<std::int64_t>(a.amulets.bits()));
    f.add(static_cast<std::int64_t>(a.done));
    f.add(static_cast<std::int64_t>(a.moves));
    f.add(static_cast<std::int64_t>(a.observes));
    f.add(a.points_spent);
    f.add(static_cast<std::int64_t>(a.queries.size()));
    for (const auto& q : a.queries) {
      f.add(static_cast<std::int64_t>(q.wizard));
      f.add(static_cast<std::int64_t>(q.yielded));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(f.h));
  return buf;
}

namespace {

json query_json(const WizardQuery& q) { return {{"wizard", q.wizard}, {"yielded", q.yielded}}; }

}  // namespace

json to_json(const AgentState& a) {
  json j;
  j["position"] = {a.position.row, a.position.col};
  j["amulets"] = json::array();
  for (Color c : kColors) {
    if (a.amulets.contains(c)) j["amulets"].push_back(to_string(c));
  }
  j["queries"] = json::array();
  for (const auto& q : a.queries) j["queries"].push_back(query_json(q));
  j["done"] = a.done;
  j["points_spent"] = a.points_spent;
  j["moves"] = a.moves;
  j["observes"] = a.observes;
  return j;
}

json to_json(const Observation& o, const GameMap& map, const CostConfig& costs) {
  json j;
  j["turn"] = o.turn;
  j["layout"] = map_to_json(map, false);
  j["self"] = to_json(o.self);
  j["self"]["points_remaining"] = costs.starting_points - o.self.points_spent;
  j["goal"] = to_string(map.goal(o.viewer));
  j["other"] = {{"position", {o.other_position.row, o.other_position.col}},
                {"done", o.other_done},
                {"level", "Expert"},
                {"queried", o.other_queried}};
  j["other"]["query"] = o.other_query ? query_json(*o.other_query) : json(nullptr);
  j["observes_used"] = o.self.observes;
  j["observes_remaining"] = kObservationCap - o.self.observes;
  return j;
}

}  // namespace mindhunt
