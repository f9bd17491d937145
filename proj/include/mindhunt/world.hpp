#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindhunt/game_map.hpp"
#include "mindhunt/types.hpp"

namespace mindhunt {

/// Point costs per action. Defaults: move 2, observe 1, 120 starting points.
struct CostConfig {
  double move_cost = 2.0;
  double observe_cost = 1.0;
  double starting_points = 120.0;

  /// Throws Error unless all costs are positive and observing is cheaper than moving.
  void validate() const;
  double cost_of(Action a) const { return a == Action::Observe ? observe_cost : move_cost; }
};

CostConfig costs_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CostConfig& c);

struct WizardQuery {
  int wizard = -1;
  bool yielded = false;

  friend bool operator==(const WizardQuery&, const WizardQuery&) = default;
};

struct AgentState {
  Cell position;
  ColorSet amulets;
  std::vector<WizardQuery> queries;  // in the order performed
  bool done = false;
  double points_spent = 0.0;
  int moves = 0;
  int observes = 0;
  std::optional<WizardQuery> last_query;  // query performed by this agent's latest step

  bool has_queried(int wizard) const;
  std::vector<int> queried_ids() const;
};

struct WorldState {
  std::array<AgentState, 2> agents;
  int turn = 0;

  AgentState& agent(Agent a) { return agents[static_cast<int>(a)]; }
  const AgentState& agent(Agent a) const { return agents[static_cast<int>(a)]; }
  int observes_used() const { return agent(Agent::Main).observes; }
};

/// What one agent perceives. Never carries the amulet assignment.
struct Observation {
  Agent viewer = Agent::Main;
  int turn = 0;
  AgentState self;
  Cell other_position;
  bool other_done = false;
  std::vector<int> other_queried;
  std::optional<WizardQuery> other_query;  // witnessed this step
};

WorldState initial_state(const GameMap& map);

/// Deterministic projection of the state for `viewer`.
Observation observe(const WorldState& state, const GameMap& map, Agent viewer);

/// Moves are always legal while the agent is active; Observe only for the main
/// agent while the other agent is active and the observation cap is not reached.
std::vector<Action> legal_actions(const WorldState& state, Agent agent);

/// Source of the other agent's moves during Observe turns.
class NpcPolicy {
 public:
  virtual ~NpcPolicy() = default;
  virtual Action next_action(const WorldState& state) = 0;
};

struct StepResult {
  WorldState state;
  Observation observation;
};

/// Applies one main-agent action. Observe advances the other agent one step
/// using `npc`. Throws IllegalActionError.
StepResult step(const WorldState& state, const GameMap& map, const CostConfig& costs,
                Action main_action, NpcPolicy& npc);

/// Moves a single agent one cell (or not, when blocked) and performs the
/// implicit wizard query and goal check. Costs are not charged.
void advance_agent(AgentState& agent, const GameMap& map, Action move, ChestLabel goal);

/// Stable 64-bit digest of the full state, as 16 hex digits.
std::string state_digest(const WorldState& state);

nlohmann::json to_json(const AgentState& a);
nlohmann::json to_json(const Observation& o, const GameMap& map, const CostConfig& costs);

}  // namespace mindhunt
