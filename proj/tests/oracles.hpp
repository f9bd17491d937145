#pragma once

// Independent reference computations for the engine. They read only raw map
// data (walls, objects, holders) and never call the planner or mindreader,
// except the expectimax, which reuses plan_cost for its leaves.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <tuple>
#include <vector>

#include "mindhunt/game_map.hpp"
#include "mindhunt/mindreader.hpp"
#include "mindhunt/planner.hpp"
#include "mindhunt/world.hpp"

namespace oracle {

using namespace mindhunt;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool open_cell(const GameMap& map, Cell c, ColorSet held) {
  if (c.row < 0 || c.col < 0 || c.row >= map.height() || c.col >= map.width()) return false;
  if (map.is_wall(c)) return false;
  for (const Barrier& b : map.barriers()) {
    if (b.cell == c && !held.contains(b.color)) return false;
  }
  return true;
}

inline Cell shifted(Cell c, Action a) {
  switch (a) {
    case Action::Up: return {c.row - 1, c.col};
    case Action::Down: return {c.row + 1, c.col};
    case Action::Left: return {c.row, c.col - 1};
    case Action::Right: return {c.row, c.col + 1};
    default: return c;
  }
}

/// Plain Dijkstra over cells.
inline double dijkstra(const GameMap& map, Cell from, Cell to, ColorSet held, double move_cost = 2.0) {
  if (from == to) return 0.0;
  if (!open_cell(map, to, held)) return kInf;
  std::map<Cell, double> dist;
  using Entry = std::pair<double, Cell>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  dist[from] = 0.0;
  pq.emplace(0.0, from);
  while (!pq.empty()) {
    auto [d, c] = pq.top();
    pq.pop();
    if (d > dist[c]) continue;
    if (c == to) return d;
    for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
      const Cell n = shifted(c, a);
      if (!open_cell(map, n, held)) continue;
      auto it = dist.find(n);
      if (it == dist.end() || d + move_cost < it->second) {
        dist[n] = d + move_cost;
        pq.emplace(d + move_cost, n);
      }
    }
  }
  return kInf;
}

using Holders = std::array<int, 2>;

inline ColorSet pickup(const GameMap& map, Cell c, ColorSet held, const Holders& holders) {
  for (const Wizard& w : map.wizards()) {
    if (w.cell == c && holders[static_cast<int>(w.color)] == w.id) held = held.with(w.color);
  }
  return held;
}

/// Cost to the goal chest for an agent that knows the holders, over the
/// product graph (cell, amulets held).
inline double known_value(const GameMap& map, ChestLabel goal, Cell from, ColorSet held, const Holders& holders,
                          double move_cost) {
  const Cell chest = map.chest(goal).cell;
  using Node = std::pair<Cell, int>;
  std::map<Node, double> dist;
  using Entry = std::pair<double, Node>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  const Node start{from, held.bits()};
  dist[start] = 0.0;
  pq.emplace(0.0, start);
  while (!pq.empty()) {
    auto [d, node] = pq.top();
    pq.pop();
    if (d > dist[node]) continue;
    if (node.first == chest) return d;
    const ColorSet h = ColorSet::from_bits(static_cast<std::uint8_t>(node.second));
    for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
      const Cell n = shifted(node.first, a);
      if (!open_cell(map, n, h)) continue;
      const Node next{n, pickup(map, n, h, holders).bits()};
      auto it = dist.find(next);
      if (it == dist.end() || d + move_cost < it->second) {
        dist[next] = d + move_cost;
        pq.emplace(d + move_cost, next);
      }
    }
  }
  return kInf;
}

inline std::array<double, 4> known_q(const GameMap& map, ChestLabel goal, Cell at, ColorSet held,
                                     const Holders& holders, double move_cost) {
  std::array<double, 4> q{};
  int i = 0;
  for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
    Cell n = shifted(at, a);
    ColorSet h = held;
    if (open_cell(map, n, held)) {
      h = pickup(map, n, held, holders);
    } else {
      n = at;
    }
    q[i++] = move_cost + known_value(map, goal, n, h, holders, move_cost);
  }
  return q;
}

inline std::array<double, 4> softmin(const std::array<double, 4>& q, double beta) {
  std::array<double, 4> p{};
  double z = 0.0;
  for (int i = 0; i < 4; ++i) z += std::exp(-beta * q[i]);
  for (int i = 0; i < 4; ++i) p[i] = std::exp(-beta * q[i]) / z;
  return p;
}

inline std::vector<Holders> all_holders(const GameMap& map) {
  std::vector<int> blue, red;
  for (const Wizard& w : map.wizards()) (w.color == Color::Blue ? blue : red).push_back(w.id);
  if (blue.empty()) blue.push_back(-1);
  if (red.empty()) red.push_back(-1);
  std::vector<Holders> out;
  for (int b : blue) {
    for (int r : red) out.push_back({b, r});
  }
  return out;
}

struct WeightedHypothesis {
  ChestLabel goal;
  Holders holders;
  double p;
};

/// Direct evaluation of the goal/holder posterior: uniform prior times the
/// product of Boltzmann likelihoods of every witnessed step, zero for any
/// hypothesis that predicts a different outcome for a step.
inline std::vector<WeightedHypothesis> enumerate_posterior(const GameMap& map, Cell npc_start,
                                                           const std::vector<NpcStep>& steps, double beta,
                                                           double move_cost) {
  std::vector<WeightedHypothesis> out;
  double total = 0.0;
  for (const Chest& chest : map.chests()) {
    for (const Holders& holders : all_holders(map)) {
      double p = 1.0;
      Cell pos = npc_start;
      std::vector<int> queried;
      for (const NpcStep& s : steps) {
        if (pos == chest.cell) {
          p = 0.0;
          break;
        }
        ColorSet held;
        for (int c = 0; c < 2; ++c) {
          if (holders[c] >= 0 && std::count(queried.begin(), queried.end(), holders[c])) {
            held = held.with(static_cast<Color>(c));
          }
        }
        p *= softmin(known_q(map, chest.label, pos, held, holders, move_cost), beta)[static_cast<int>(s.action)];
        Cell to = shifted(pos, s.action);
        if (!open_cell(map, to, held)) to = pos;
        std::optional<WizardQuery> query;
        for (const Wizard& w : map.wizards()) {
          if (w.cell == to && !std::count(queried.begin(), queried.end(), w.id)) {
            query = WizardQuery{w.id, holders[static_cast<int>(w.color)] == w.id};
            queried.push_back(w.id);
          }
        }
        if (to != s.to || query != s.query || (to == chest.cell) != s.reached_goal) {
          p = 0.0;
          break;
        }
        pos = to;
      }
      out.push_back({chest.label, holders, p});
      total += p;
    }
  }
  for (auto& h : out) h.p /= total;
  return out;
}

/// Expected cost of the best fixed visiting order over the candidate holders
/// of `color` (the only missing color), then the walk to the chest.
inline double tour_by_orders(const GameMap& map, ChestLabel goal, Cell from, ColorSet held, Color color,
                             const std::vector<double>& belief, double move_cost) {
  const Cell chest = map.chest(goal).cell;
  std::vector<int> candidates;
  for (const Wizard& w : map.wizards()) {
    if (w.color != color) continue;
    double mass = 0.0;
    for (std::size_t t = 0; t < belief.size(); ++t) {
      if (map.assignments()[t].holder_of(color) == w.id) mass += belief[t];
    }
    if (mass > 0.0) candidates.push_back(w.id);
  }
  std::sort(candidates.begin(), candidates.end());
  double best = kInf;
  do {
    double expected = 0.0;
    for (std::size_t t = 0; t < belief.size(); ++t) {
      if (!(belief[t] > 0.0)) continue;
      const int holder = map.assignments()[t].holder_of(color);
      double walked = 0.0;
      Cell at = from;
      for (int w : candidates) {
        walked += dijkstra(map, at, map.wizard(w).cell, held, move_cost);
        at = map.wizard(w).cell;
        if (w == holder) break;
      }
      expected += belief[t] * (walked + dijkstra(map, at, chest, held.with(color), move_cost));
    }
    best = std::min(best, expected);
  } while (std::next_permutation(candidates.begin(), candidates.end()));
  return best;
}

/// Expectimax over observe / move / act-to-completion choices for the main
/// agent, with the other agent following its deterministic optimal plan
/// under each (goal, holders) hypothesis.
class Expectimax {
 public:
  struct Node {
    Cell pos;
    ColorSet held;
    std::vector<WizardQuery> queries;
    NpcView npc;
    std::vector<double> weights;  // over `hypotheses`
    int observes_left = 0;
    int moves_left = 0;
  };

  Expectimax(Planner& planner, ChestLabel goal, std::vector<Hypothesis> hypotheses)
      : planner_(planner), map_(planner.map()), goal_(goal), hyps_(std::move(hypotheses)) {}

  struct RootValues {
    double observe = -kInf;
    double other = -kInf;  // best of moving or acting
  };

  RootValues root(const Node& n) {
    RootValues v;
    v.other = std::max(act_value(n), move_value(n));
    v.observe = observe_value(n);
    return v;
  }

  double value(const Node& n) {
    if (n.pos == map_.chest(goal_).cell) return 0.0;
    return std::max({act_value(n), move_value(n), observe_value(n)});
  }

 private:
  Belief marginal(const Node& n) const {
    Belief b{std::vector<double>(map_.assignments().size(), 0.0)};
    for (std::size_t k = 0; k < hyps_.size(); ++k) b.probs[hyps_[k].assignment] += n.weights[k];
    double total = 0.0;
    for (double p : b.probs) total += p;
    for (double& p : b.probs) p /= total;
    return b;
  }

  double act_value(const Node& n) {
    if (n.pos == map_.chest(goal_).cell) return 0.0;
    return -planner_.expected_cost(goal_, n.pos, n.held, marginal(n));
  }

  double move_value(const Node& n) {
    if (n.moves_left <= 0 || n.pos == map_.chest(goal_).cell) return -kInf;
    const Belief b = marginal(n);
    const QEstimate q = planner_.q_values(goal_, n.pos, n.held, b);
    if (!std::isfinite(q.min())) return -kInf;
    const Action a = argmin_action(q);
    Node child = n;
    child.moves_left--;
    Cell to = shifted(n.pos, a);
    if (open_cell(map_, to, n.held)) child.pos = to;
    for (const Wizard& w : map_.wizards()) {
      if (w.cell != child.pos) continue;
      bool seen = false;
      for (const auto& q2 : n.queries) seen = seen || q2.wizard == w.id;
      if (seen) continue;
      // Branch on the answer.
      double total = 0.0, yes = 0.0;
      for (std::size_t k = 0; k < hyps_.size(); ++k) {
        total += n.weights[k];
        if (map_.assignments()[hyps_[k].assignment].holder_of(w.color) == w.id) yes += n.weights[k];
      }
      double v = 0.0;
      for (bool answer : {true, false}) {
        const double p = answer ? yes / total : 1.0 - yes / total;
        if (!(p > 1e-12)) continue;
        Node branch = child;
        branch.queries.push_back({w.id, answer});
        if (answer) branch.held = branch.held.with(w.color);
        for (std::size_t k = 0; k < hyps_.size(); ++k) {
          const bool holds = map_.assignments()[hyps_[k].assignment].holder_of(w.color) == w.id;
          if (holds != answer) branch.weights[k] = 0.0;
        }
        v += p * value(branch);
      }
      return -planner_.costs().move_cost + v;
    }
    return -planner_.costs().move_cost + value(child);
  }

  double observe_value(const Node& n) {
    if (n.observes_left <= 0 || n.npc.done) return -kInf;
    // Group live hypotheses by the other agent's next step.
    std::vector<std::pair<NpcStep, std::vector<std::size_t>>> groups;
    double total = 0.0;
    for (std::size_t k = 0; k < hyps_.size(); ++k) {
      if (!(n.weights[k] > 0.0)) continue;
      total += n.weights[k];
      const NpcStep s = next_step(n.npc, hyps_[k]);
      auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == s; });
      if (it == groups.end()) {
        groups.push_back({s, {k}});
      } else {
        it->second.push_back(k);
      }
    }
    double v = 0.0;
    for (const auto& [s, members] : groups) {
      Node child = n;
      child.observes_left--;
      child.npc = advance(n.npc, s);
      double mass = 0.0;
      std::fill(child.weights.begin(), child.weights.end(), 0.0);
      for (std::size_t k : members) {
        child.weights[k] = n.weights[k];
        mass += n.weights[k];
      }
      v += mass / total * value(child);
    }
    return -planner_.costs().observe_cost + v;
  }

  NpcStep next_step(const NpcView& view, const Hypothesis& h) {
    const AmuletAssignment& t = map_.assignments()[h.assignment];
    const Holders holders{t.holder_of(Color::Blue), t.holder_of(Color::Red)};
    if (view.position == map_.chest(h.goal).cell) {
      NpcStep idle;
      idle.to = view.position;
      return idle;
    }
    ColorSet held;
    for (int c = 0; c < 2; ++c) {
      if (holders[c] >= 0 && std::count(view.queried.begin(), view.queried.end(), holders[c])) {
        held = held.with(static_cast<Color>(c));
      }
    }
    const auto q = known_q(map_, h.goal, view.position, held, holders, planner_.costs().move_cost);
    const double best = *std::min_element(q.begin(), q.end());
    int pick = 0;
    while (q[pick] > best + 1e-9) ++pick;
    NpcStep s;
    s.action = static_cast<Action>(pick);
    s.to = shifted(view.position, s.action);
    if (!open_cell(map_, s.to, held)) s.to = view.position;
    for (const Wizard& w : map_.wizards()) {
      if (w.cell == s.to && !std::count(view.queried.begin(), view.queried.end(), w.id)) {
        s.query = WizardQuery{w.id, holders[static_cast<int>(w.color)] == w.id};
      }
    }
    s.reached_goal = s.to == map_.chest(h.goal).cell;
    return s;
  }

  Planner& planner_;
  const GameMap& map_;
  ChestLabel goal_;
  std::vector<Hypothesis> hyps_;
};

}  // namespace oracle
