#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mindhunt/mindreader.hpp"
#include "mindhunt/planner.hpp"
#include "mindhunt/world.hpp"

namespace mindhunt {

/// Hypotheses below this mass are ignored when simulating the other agent.
inline constexpr double kLiveMass = 1e-9;
/// Information-gain threshold standing in for "> 0".
inline constexpr double kInfoEpsilon = 1e-9;
inline constexpr double kDefaultBeta = 2.0;

/// Everything an observer policy may look at when choosing the main agent's action.
struct Situation {
  const GameMap& map;
  const WorldState& state;
  const CostConfig& costs;
  Planner& planner;
  const Posterior& social;    // updated with Boltzmann likelihoods of witnessed moves
  const Posterior& evidence;  // updated with hard evidence only
  double beta = kDefaultBeta;

  const AgentState& self() const { return state.agent(Agent::Main); }
  ChestLabel goal() const { return map.goal(Agent::Main); }
  NpcView npc() const { return npc_view(state); }
  /// Observe actions still allowed this episode; zero once the other agent is done.
  int budget() const;
};

struct HypothesisDiagnostic {
  Hypothesis hypothesis;
  double probability = 0.0;
  int best_horizon = 0;
  double utility = 0.0;
};

struct ObserverDecision {
  Action action = Action::Up;
  std::optional<double> u_obs;
  std::optional<double> u_act;
  int t_star = 0;
  std::optional<double> info_gain;  // social mentalizing only
  std::vector<HypothesisDiagnostic> hypotheses;
};

struct ObserveUtility {
  double value = 0.0;
  int t_star = 0;
  std::vector<HypothesisDiagnostic> per_hypothesis;
};

/// Negative expected cost of acting now on `belief`.
double utility_act(Planner& planner, const AgentState& self, ChestLabel goal, const Belief& belief);

/// Expected utility of observing for the best number of steps T (1..budget)
/// under each live hypothesis, averaged by posterior mass. `joint` must
/// already be conditioned on the main agent's own queries.
ObserveUtility utility_observe(Planner& planner, const AgentState& self, ChestLabel goal, const Posterior& joint,
                               const NpcView& npc, int budget);

/// KL(p || q) over assignments; +inf when q is zero where p is not.
double kl_divergence(const Belief& p, const Belief& q);

struct InformationGain {
  double value = 0.0;  // max over T of the expected KL
  int t_star = 0;
};

/// Max over T <= budget of the posterior-expected KL between the current
/// assignment belief and the belief after T more witnessed steps.
InformationGain expected_information_gain(Planner& planner, const Posterior& joint, const NpcView& npc, int budget);

/// Predicted evidence from watching the other agent: the posterior-mass
/// classes of hypotheses that would produce identical observations for the
/// first T steps.
class ObservationForecast {
 public:
  ObservationForecast(Planner& planner, const Posterior& joint, const NpcView& npc, int budget);

  std::size_t size() const { return hypotheses_.size(); }
  const Hypothesis& hypothesis(std::size_t k) const { return hypotheses_[k]; }
  double weight(std::size_t k) const { return weights_[k]; }
  int length(std::size_t k) const { return static_cast<int>(traces_[k].size()); }
  const std::vector<NpcStep>& trace(std::size_t k) const { return traces_[k]; }
  /// Equivalence class of hypothesis k after T witnessed steps (T <= length(k)).
  int class_at(std::size_t k, int t) const { return classes_[t][k]; }
  /// Assignment belief after witnessing T steps consistent with hypothesis k.
  Belief belief_after(std::size_t k, int t) const;
  /// Current assignment belief restricted to the live hypotheses.
  Belief current_belief() const;
  int max_length() const { return static_cast<int>(classes_.size()) - 1; }

 private:
  const GameMap* map_;
  std::vector<Hypothesis> hypotheses_;
  std::vector<double> weights_;
  std::vector<std::vector<NpcStep>> traces_;
  std::vector<std::vector<int>> classes_;  // [t][k]
};

ObserverDecision decide_rational_mentalizing(const Situation& s);
ObserverDecision decide_social_mentalizing(const Situation& s);
ObserverDecision decide_rational_nonmentalizing(const Situation& s);
ObserverDecision decide_naive(const Situation& s);

/// Greedy first move of the plan that achieves the expected plan cost.
Action act_on_belief(const Situation& s, const Belief& belief);

/// Observer policy driving the main agent in an episode.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual std::string name() const = 0;
  virtual ObserverDecision decide(const Situation& s) = 0;
};

/// One of naive, rational_nonmentalizing, social_mentalizing, rational_mentalizing.
std::unique_ptr<Observer> make_observer(std::string_view name);

/// Replays a fixed action list, then stops.
std::unique_ptr<Observer> make_scripted_observer(std::vector<Action> actions);

const std::vector<std::string>& model_names();

}  // namespace mindhunt
