#include "mindhunt/observers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mindhunt {

int Situation::budget() const {
  if (state.agent(Agent::Other).done) return 0;
  return std::max(0, kObservationCap - state.observes_used());
}

double utility_act(Planner& planner, const AgentState& self, ChestLabel goal, const Belief& belief) {
  return -planner.plan_cost(goal, self.position, self.amulets, belief);
}

ObservationForecast::ObservationForecast(Planner& planner, const Posterior& joint, const NpcView& npc, int budget)
    : map_(&planner.map()) {
  double total = 0.0;
  for (std::size_t i = 0; i < joint.probs.size(); ++i) {
    if (joint.probs[i] > kLiveMass) {
      hypotheses_.push_back(joint.hypotheses[i]);
      weights_.push_back(joint.probs[i]);
      total += joint.probs[i];
    }
  }
  for (double& w : weights_) w /= total;
  int longest = 0;
  for (const Hypothesis& h : hypotheses_) {
    traces_.push_back(simulate_npc_trace(planner, npc, h, budget));
    longest = std::max(longest, static_cast<int>(traces_.back().size()));
  }
  // Partition refinement: two hypotheses share a class at T when their first
  // T predicted steps (positions, query results, goal completion) agree.
  classes_.assign(longest + 1, std::vector<int>(hypotheses_.size(), -1));
  std::fill(classes_[0].begin(), classes_[0].end(), 0);
  for (int t = 1; t <= longest; ++t) {
    std::vector<std::pair<int, std::size_t>> reps;  // (parent class, representative)
    for (std::size_t k = 0; k < hypotheses_.size(); ++k) {
      if (length(k) < t) continue;
      const int parent = classes_[t - 1][k];
      const NpcStep& step = traces_[k][t - 1];
      int id = -1;
      for (std::size_t r = 0; r < reps.size(); ++r) {
        if (reps[r].first == parent && traces_[reps[r].second][t - 1] == step) {
          id = static_cast<int>(r);
          break;
        }
      }
      if (id < 0) {
        id = static_cast<int>(reps.size());
        reps.emplace_back(parent, k);
      }
      classes_[t][k] = id;
    }
  }
}

Belief ObservationForecast::belief_after(std::size_t k, int t) const {
  Belief b{std::vector<double>(map_->assignments().size(), 0.0)};
  const int id = classes_.at(t).at(k);
  for (std::size_t j = 0; j < hypotheses_.size(); ++j) {
    if (classes_[t][j] == id) b.probs[hypotheses_[j].assignment] += weights_[j];
  }
  normalize(b.probs);
  return b;
}

Belief ObservationForecast::current_belief() const {
  Belief b{std::vector<double>(map_->assignments().size(), 0.0)};
  for (std::size_t j = 0; j < hypotheses_.size(); ++j) b.probs[hypotheses_[j].assignment] += weights_[j];
  normalize(b.probs);
  return b;
}

namespace {

/// Horizon with the largest total mass among per-hypothesis optima; ties go to the shorter horizon.
int modal_horizon(const std::vector<HypothesisDiagnostic>& diags) {
  std::map<int, double> mass;
  for (const auto& d : diags) mass[d.best_horizon] += d.probability;
  int best = 0;
  double best_mass = -1.0;
  for (const auto& [t, m] : mass) {
    if (m > best_mass + 1e-12) {
      best = t;
      best_mass = m;
    }
  }
  return best;
}

}  // namespace

ObserveUtility utility_observe(Planner& planner, const AgentState& self, ChestLabel goal, const Posterior& joint,
                               const NpcView& npc, int budget) {
  if (budget < 1) throw std::invalid_argument("utility_observe requires budget >= 1");
  const CostConfig& costs = planner.costs();
  const ObservationForecast forecast(planner, joint, npc, budget);

  std::map<std::pair<int, int>, double> cost_cache;  // (T, class) -> plan cost
  auto plan_after = [&](std::size_t k, int t) {
    const auto key = std::make_pair(t, forecast.class_at(k, t));
    auto it = cost_cache.find(key);
    if (it == cost_cache.end()) {
      it = cost_cache.emplace(key, planner.expected_cost(goal, self.position, self.amulets, forecast.belief_after(k, t)))
               .first;
    }
    return it->second;
  };

  ObserveUtility out;
  for (std::size_t k = 0; k < forecast.size(); ++k) {
    HypothesisDiagnostic d{forecast.hypothesis(k), forecast.weight(k), 0, 0.0};
    const int len = forecast.length(k);
    if (len == 0) {
      // Nothing to watch under this hypothesis: one wasted observation.
      d.best_horizon = 1;
      d.utility = -costs.observe_cost - plan_after(k, 0);
    } else {
      d.utility = -kUnreachable;
      for (int t = 1; t <= len; ++t) {
        const double u = -t * costs.observe_cost - plan_after(k, t);
        if (u > d.utility) {
          d.utility = u;
          d.best_horizon = t;
        }
      }
    }
    out.value += d.probability * d.utility;
    out.per_hypothesis.push_back(d);
  }
  out.t_star = modal_horizon(out.per_hypothesis);
  return out;
}

double kl_divergence(const Belief& p, const Belief& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) continue;
    if (!(q[i] > 0.0)) return kUnreachable;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, kl);
}

InformationGain expected_information_gain(Planner& planner, const Posterior& joint, const NpcView& npc, int budget) {
  InformationGain out;
  if (budget < 1) return out;
  const ObservationForecast forecast(planner, joint, npc, budget);
  const Belief now = forecast.current_belief();
  std::map<std::pair<int, int>, double> kl_cache;
  for (int t = 1; t <= forecast.max_length(); ++t) {
    double expected = 0.0;
    for (std::size_t k = 0; k < forecast.size(); ++k) {
      const int tk = std::min(t, forecast.length(k));
      const auto key = std::make_pair(tk, forecast.class_at(k, tk));
      auto it = kl_cache.find(key);
      if (it == kl_cache.end()) it = kl_cache.emplace(key, kl_divergence(now, forecast.belief_after(k, tk))).first;
      expected += forecast.weight(k) * it->second;
    }
    if (expected > out.value) {
      out.value = expected;
      out.t_star = t;
    }
  }
  return out;
}

Action act_on_belief(const Situation& s, const Belief& belief) {
  const QEstimate q = s.planner.q_values(s.goal(), s.self().position, s.self().amulets, belief);
  if (!std::isfinite(q.min())) throw PlanningError("goal unreachable under all hypotheses");
  return argmin_action(q);
}

ObserverDecision decide_rational_mentalizing(const Situation& s) {
  const Posterior joint = condition_on_queries(s.social, s.map, s.self().queries);
  const Belief belief = joint.assignment_marginal(s.map);
  ObserverDecision d;
  d.u_act = utility_act(s.planner, s.self(), s.goal(), belief);
  if (s.budget() > 0) {
    ObserveUtility obs = utility_observe(s.planner, s.self(), s.goal(), joint, s.npc(), s.budget());
    d.u_obs = obs.value;
    d.t_star = obs.t_star;
    d.hypotheses = std::move(obs.per_hypothesis);
  }
  // Strict: equal utilities resolve to acting.
  d.action = d.u_obs && *d.u_obs > *d.u_act ? Action::Observe : act_on_belief(s, belief);
  return d;
}

ObserverDecision decide_social_mentalizing(const Situation& s) {
  const Posterior joint = condition_on_queries(s.social, s.map, s.self().queries);
  const Belief belief = joint.assignment_marginal(s.map);
  ObserverDecision d;
  if (s.budget() > 0) {
    const InformationGain gain = expected_information_gain(s.planner, joint, s.npc(), s.budget());
    d.info_gain = gain.value;
    d.t_star = gain.t_star;
    if (gain.value > kInfoEpsilon) {
      d.action = Action::Observe;
      return d;
    }
  }
  d.action = act_on_belief(s, belief);
  return d;
}

ObserverDecision decide_rational_nonmentalizing(const Situation& s) {
  const Posterior joint = condition_on_queries(s.evidence, s.map, s.self().queries);
  const Belief belief = joint.assignment_marginal(s.map);
  const CostConfig& costs = s.costs;
  ObserverDecision d;
  d.u_act = utility_act(s.planner, s.self(), s.goal(), belief);
  const int budget = s.budget();
  if (budget > 0) {
    // Assume the other agent shares our goal; watch until it meets a wizard or stops.
    double u_obs = 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < belief.size(); ++t) {
      if (belief[t] > kLiveMass) total += belief[t];
    }
    const NpcView npc = s.npc();
    for (std::size_t t = 0; t < belief.size(); ++t) {
      if (!(belief[t] > kLiveMass)) continue;
      const Hypothesis h{s.goal(), static_cast<int>(t)};
      const auto trace = simulate_npc_trace(s.planner, npc, h, budget);
      int horizon = static_cast<int>(trace.size());
      std::optional<WizardQuery> seen;
      for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace[i].query || trace[i].reached_goal) {
          horizon = static_cast<int>(i) + 1;
          seen = trace[i].query;
          break;
        }
      }
      horizon = std::max(horizon, 1);
      Belief after = belief;
      if (seen) {
        const Color c = s.map.wizard(seen->wizard).color;
        for (std::size_t j = 0; j < after.size(); ++j) {
          if ((s.map.assignments()[j].holder_of(c) == seen->wizard) != seen->yielded) after.probs[j] = 0.0;
        }
        normalize(after.probs);
      }
      HypothesisDiagnostic diag{h, belief[t] / total, horizon, 0.0};
      diag.utility = -horizon * costs.observe_cost -
                     s.planner.expected_cost(s.goal(), s.self().position, s.self().amulets, after);
      u_obs += diag.probability * diag.utility;
      d.hypotheses.push_back(diag);
    }
    d.u_obs = u_obs;
    d.t_star = modal_horizon(d.hypotheses);
  }
  d.action = d.u_obs && *d.u_obs > *d.u_act ? Action::Observe : act_on_belief(s, belief);
  return d;
}

ObserverDecision decide_naive(const Situation& s) {
  ObserverDecision d;
  const bool npc_met_wizard = !s.state.agent(Agent::Other).queries.empty();
  if (s.budget() > 0 && !npc_met_wizard) {
    d.action = Action::Observe;
    return d;
  }
  d.action = act_on_belief(s, belief_from_evidence(s.evidence, s.map, s.self().queries));
  return d;
}

namespace {

class FunctionObserver final : public Observer {
 public:
  using Fn = ObserverDecision (*)(const Situation&);
  FunctionObserver(std::string name, Fn fn) : name_(std::move(name)), fn_(fn) {}
  std::string name() const override { return name_; }
  ObserverDecision decide(const Situation& s) override { return fn_(s); }

 private:
  std::string name_;
  Fn fn_;
};

class ScriptedObserver final : public Observer {
 public:
  explicit ScriptedObserver(std::vector<Action> actions) : actions_(std::move(actions)) {}
  std::string name() const override { return "scripted"; }
  ObserverDecision decide(const Situation&) override {
    if (next_ >= actions_.size()) throw Error("scripted actions exhausted before the goal");
    ObserverDecision d;
    d.action = actions_[next_++];
    return d;
  }

 private:
  std::vector<Action> actions_;
  std::size_t next_ = 0;
};

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"naive", "rational_nonmentalizing", "social_mentalizing",
                                              "rational_mentalizing"};
  return names;
}

std::unique_ptr<Observer> make_observer(std::string_view name) {
  if (name == "naive") return std::make_unique<FunctionObserver>("naive", &decide_naive);
  if (name == "rational_nonmentalizing") {
    return std::make_unique<FunctionObserver>("rational_nonmentalizing", &decide_rational_nonmentalizing);
  }
  if (name == "social_mentalizing") {
    return std::make_unique<FunctionObserver>("social_mentalizing", &decide_social_mentalizing);
  }
  if (name == "rational_mentalizing") {
    return std::make_unique<FunctionObserver>("rational_mentalizing", &decide_rational_mentalizing);
  }
  throw Error("unknown model: " + std::string(name));
}

std::unique_ptr<Observer> make_scripted_observer(std::vector<Action> actions) {
  return std::make_unique<ScriptedObserver>(std::move(actions));
}

}  // namespace mindhunt
