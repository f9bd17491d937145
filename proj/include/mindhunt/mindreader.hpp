#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mindhunt/belief.hpp"
#include "mindhunt/planner.hpp"
#include "mindhunt/world.hpp"

namespace mindhunt {

/// One joint hypothesis about the other agent: its goal and the amulet
/// assignment it knows.
struct Hypothesis {
  ChestLabel goal = ChestLabel::A;
  int assignment = 0;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

/// What the main agent sees of the other agent.
struct NpcView {
  Cell position;
  std::vector<int> queried;  // wizards it has visited
  bool done = false;
};

NpcView npc_view(const WorldState& state);

/// One witnessed step of the other agent.
struct NpcStep {
  Action action = Action::Up;
  Cell to;
  std::optional<WizardQuery> query;
  bool reached_goal = false;

  friend bool operator==(const NpcStep&, const NpcStep&) = default;
};

/// Applies `step` to `view` (position, queried set, done flag).
NpcView advance(NpcView view, const NpcStep& step);

/// Joint posterior over (goal, amulet assignment).
struct Posterior {
  std::vector<Hypothesis> hypotheses;
  std::vector<double> probs;
  std::vector<NpcStep> history;

  double goal_probability(ChestLabel goal) const;
  /// Marginal over amulet assignments.
  Belief assignment_marginal(const GameMap& map) const;
  bool normalized(double tol = 1e-12) const;
};

/// Uniform over present chests (or `goal_prior`, renormalized) times uniform
/// over amulet assignments.
Posterior init_posterior(const GameMap& map, const std::map<ChestLabel, double>& goal_prior = {});

/// The step the other agent would produce by taking `action` under `hypothesis`.
NpcStep predict_step(const GameMap& map, const NpcView& view, const Hypothesis& hypothesis, Action action);

/// Bayesian update with the Boltzmann likelihood of the witnessed action
/// under each hypothesis' full-knowledge Q-values. Hypotheses inconsistent
/// with the witnessed outcome (position, query result, goal completion) get
/// probability zero. Throws InferenceError when nothing survives.
Posterior update_posterior(const Posterior& posterior, Planner& planner, const NpcView& before,
                           const NpcStep& witnessed, double beta);

/// Conditions only on the hard evidence in `witnessed`; no likelihood of the
/// action itself. Used by the non-mentalizing observers.
Posterior apply_hard_evidence(const Posterior& posterior, const GameMap& map, const NpcView& before,
                              const NpcStep& witnessed);

/// Marginal over assignments conditioned on the main agent's own queries.
/// Throws InferenceError on contradictory evidence.
Belief belief_from_evidence(const Posterior& posterior, const GameMap& map,
                            std::span<const WizardQuery> own_queries);

/// Joint posterior conditioned on the main agent's own queries.
Posterior condition_on_queries(const Posterior& posterior, const GameMap& map,
                               std::span<const WizardQuery> own_queries);

/// Deterministic full-knowledge trajectory of the other agent under
/// `hypothesis`, truncated at `horizon` steps or goal completion.
std::vector<NpcStep> simulate_npc_trace(Planner& planner, const NpcView& start, const Hypothesis& hypothesis,
                                        int horizon);

std::vector<Action> simulate_npc(Planner& planner, const NpcView& start, const Hypothesis& hypothesis,
                                 int horizon);

/// Deterministic optimal next move under `hypothesis`.
Action npc_optimal_action(Planner& planner, const NpcView& view, const Hypothesis& hypothesis);

nlohmann::json to_json(const Posterior& posterior, const GameMap& map);
nlohmann::json assignment_json(const AmuletAssignment& a);

}  // namespace mindhunt
