#include "mindhunt/mindreader.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mindhunt {

using nlohmann::json;

NpcView npc_view(const WorldState& state) {
  const AgentState& o = state.agent(Agent::Other);
  return {o.position, o.queried_ids(), o.done};
}

NpcView advance(NpcView view, const NpcStep& step) {
  view.position = step.to;
  if (step.query && std::find(view.queried.begin(), view.queried.end(), step.query->wizard) == view.queried.end()) {
    view.queried.push_back(step.query->wizard);
    std::sort(view.queried.begin(), view.queried.end());
  }
  view.done = view.done || step.reached_goal;
  return view;
}

double Posterior::goal_probability(ChestLabel goal) const {
  double p = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (hypotheses[i].goal == goal) p += probs[i];
  }
  return p;
}

Belief Posterior::assignment_marginal(const GameMap& map) const {
  Belief b{std::vector<double>(map.assignments().size(), 0.0)};
  for (std::size_t i = 0; i < probs.size(); ++i) b.probs[hypotheses[i].assignment] += probs[i];
  return b;
}

bool Posterior::normalized(double tol) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

Posterior init_posterior(const GameMap& map, const std::map<ChestLabel, double>& goal_prior) {
  Posterior post;
  const double per_assignment = 1.0 / static_cast<double>(map.assignments().size());
  for (const Chest& c : map.chests()) {
    double g = 1.0;
    if (!goal_prior.empty()) {
      auto it = goal_prior.find(c.label);
      g = it == goal_prior.end() ? 0.0 : it->second;
    }
    for (std::size_t t = 0; t < map.assignments().size(); ++t) {
      post.hypotheses.push_back({c.label, static_cast<int>(t)});
      post.probs.push_back(g * per_assignment);
    }
  }
  normalize(post.probs);
  return post;
}

NpcStep predict_step(const GameMap& map, const NpcView& view, const Hypothesis& hypothesis, Action action) {
  const AmuletAssignment& t = map.assignments().at(hypothesis.assignment);
  ColorSet held;
  for (Color c : kColors) {
    const int h = t.holder_of(c);
    if (h >= 0 && std::find(view.queried.begin(), view.queried.end(), h) != view.queried.end()) held = held.with(c);
  }
  NpcStep s;
  s.action = action;
  s.to = view.position;
  const Cell target = displaced(view.position, action);
  if (!map.passable(target, held)) return s;
  s.to = target;
  if (auto w = map.wizard_at(target);
      w && std::find(view.queried.begin(), view.queried.end(), *w) == view.queried.end()) {
    s.query = WizardQuery{*w, t.holder_of(map.wizard(*w).color) == *w};
  }
  s.reached_goal = map.chest_at(target) == hypothesis.goal;
  return s;
}

namespace {

bool consistent(const GameMap& map, const NpcView& before, const Hypothesis& h, const NpcStep& witnessed) {
  // An agent standing on its goal chest would have stopped.
  if (map.chest(h.goal).cell == before.position) return false;
  return predict_step(map, before, h, witnessed.action) == witnessed;
}

Posterior renormalized_from_logs(const Posterior& prior, const std::vector<double>& logw, const NpcStep& step) {
  const double top = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(top)) {
    throw InferenceError("no hypothesis explains the witnessed action of the other agent");
  }
  Posterior post;
  post.hypotheses = prior.hypotheses;
  post.history = prior.history;
  post.history.push_back(step);
  post.probs.resize(logw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    post.probs[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - top) : 0.0;
    total += post.probs[i];
  }
  for (double& p : post.probs) p /= total;
  return post;
}

}  // namespace

Posterior update_posterior(const Posterior& posterior, Planner& planner, const NpcView& before,
                           const NpcStep& witnessed, double beta) {
  if (!is_move(witnessed.action)) throw InferenceError("witnessed action must be a move");
  if (!(beta > 0.0)) throw InferenceError("beta must be positive");
  const GameMap& map = planner.map();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(posterior.probs.size(), neg_inf);
  for (std::size_t i = 0; i < posterior.probs.size(); ++i) {
    const double p = posterior.probs[i];
    const Hypothesis& h = posterior.hypotheses[i];
    if (!(p > 0.0) || !consistent(map, before, h, witnessed)) continue;
    const ColorSet held = planner.held_under(h.assignment, before.queried);
    const auto policy = boltzmann_policy(planner.known_q_values(h.goal, before.position, held, h.assignment), beta);
    const double likelihood = policy[static_cast<int>(witnessed.action)];
    if (!(likelihood > 0.0)) continue;
    logw[i] = std::log(p) + std::log(likelihood);
  }
  return renormalized_from_logs(posterior, logw, witnessed);
}

Posterior apply_hard_evidence(const Posterior& posterior, const GameMap& map, const NpcView& before,
                              const NpcStep& witnessed) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(posterior.probs.size(), neg_inf);
  for (std::size_t i = 0; i < posterior.probs.size(); ++i) {
    if (posterior.probs[i] > 0.0 && consistent(map, before, posterior.hypotheses[i], witnessed)) {
      logw[i] = std::log(posterior.probs[i]);
    }
  }
  return renormalized_from_logs(posterior, logw, witnessed);
}

namespace {

bool agrees(const AmuletAssignment& t, const GameMap& map, std::span<const WizardQuery> queries) {
  for (const WizardQuery& q : queries) {
    const bool holds = t.holder_of(map.wizard(q.wizard).color) == q.wizard;
    if (holds != q.yielded) return false;
  }
  return true;
}

void check_queries(std::span<const WizardQuery> queries) {
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = i + 1; j < queries.size(); ++j) {
      if (queries[i].wizard == queries[j].wizard && queries[i].yielded != queries[j].yielded) {
        throw InferenceError("contradictory evidence for wizard " + std::to_string(queries[i].wizard));
      }
    }
  }
}

}  // namespace

Posterior condition_on_queries(const Posterior& posterior, const GameMap& map,
                               std::span<const WizardQuery> own_queries) {
  check_queries(own_queries);
  Posterior out = posterior;
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    if (!agrees(map.assignments()[out.hypotheses[i].assignment], map, own_queries)) out.probs[i] = 0.0;
  }
  try {
    normalize(out.probs);
  } catch (const InferenceError&) {
    throw InferenceError("contradictory evidence: own queries rule out every hypothesis");
  }
  return out;
}

Belief belief_from_evidence(const Posterior& posterior, const GameMap& map,
                            std::span<const WizardQuery> own_queries) {
  check_queries(own_queries);
  Belief b = posterior.assignment_marginal(map);
  for (std::size_t t = 0; t < b.probs.size(); ++t) {
    if (!agrees(map.assignments()[t], map, own_queries)) b.probs[t] = 0.0;
  }
  try {
    normalize(b.probs);
  } catch (const InferenceError&) {
    throw InferenceError("contradictory evidence: own queries rule out every hypothesis");
  }
  return b;
}

Action npc_optimal_action(Planner& planner, const NpcView& view, const Hypothesis& hypothesis) {
  const ColorSet held = planner.held_under(hypothesis.assignment, view.queried);
  const QEstimate& q = planner.known_q_values(hypothesis.goal, view.position, held, hypothesis.assignment);
  if (!std::isfinite(q.min())) throw PlanningError("goal unreachable under hypothesis");
  return argmin_action(q);
}

std::vector<NpcStep> simulate_npc_trace(Planner& planner, const NpcView& start, const Hypothesis& hypothesis,
                                        int horizon) {
  std::vector<NpcStep> trace;
  NpcView view = start;
  while (static_cast<int>(trace.size()) < horizon && !view.done &&
         planner.map().chest(hypothesis.goal).cell != view.position) {
    const Action a = npc_optimal_action(planner, view, hypothesis);
    trace.push_back(predict_step(planner.map(), view, hypothesis, a));
    view = advance(view, trace.back());
  }
  return trace;
}

std::vector<Action> simulate_npc(Planner& planner, const NpcView& start, const Hypothesis& hypothesis, int horizon) {
  std::vector<Action> out;
  for (const NpcStep& s : simulate_npc_trace(planner, start, hypothesis, horizon)) out.push_back(s.action);
  return out;
}

json assignment_json(const AmuletAssignment& a) {
  json j = json::object();
  for (Color c : kColors) {
    if (a.holder_of(c) >= 0) j[std::string(to_string(c))] = a.holder_of(c);
  }
  return j;
}

json to_json(const Posterior& posterior, const GameMap& map) {
  json hyps = json::array();
  for (std::size_t i = 0; i < posterior.probs.size(); ++i) {
    const Hypothesis& h = posterior.hypotheses[i];
    hyps.push_back({{"goal", to_string(h.goal)},
                    {"amulets", assignment_json(map.assignments()[h.assignment])},
                    {"p", posterior.probs[i]}});
  }
  return {{"hypotheses", hyps}};
}

}  // namespace mindhunt
