#include "mindhunt/planner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <queue>
#include <tuple>

namespace mindhunt {

double QEstimate::min() const { return *std::min_element(cost.begin(), cost.end()); }

std::array<double, 4> boltzmann_policy(const QEstimate& q, double beta) {
  const double best = q.min();
  std::array<double, 4> p{};
  if (!std::isfinite(best)) return p;
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    p[i] = std::isfinite(q.cost[i]) ? std::exp(-beta * (q.cost[i] - best)) : 0.0;
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

Action argmin_action(const QEstimate& q, double tol) {
  const double best = q.min();
  for (Action a : kMoves) {
    if (q[a] <= best + tol) return a;
  }
  return Action::Up;
}

namespace {

struct AStarResult {
  int steps = -1;
  std::vector<Action> path;
};

AStarResult astar(const GameMap& map, Cell from, Cell to, ColorSet amulets, bool want_path) {
  AStarResult result;
  if (from == to) {
    result.steps = 0;
    return result;
  }
  if (!map.in_bounds(from) || !map.passable(to, amulets)) return result;
  const int n = map.cell_count();
  std::vector<int> g(n, std::numeric_limits<int>::max());
  std::vector<int> parent(n, -1);
  std::vector<std::int8_t> via(n, -1);
  std::vector<bool> closed(n, false);
  // (f, row, col): lower f first, then lower (row, col).
  using Entry = std::tuple<int, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[map.index(from)] = 0;
  open.emplace(manhattan(from, to), from.row, from.col);
  while (!open.empty()) {
    const auto [f, r, c] = open.top();
    open.pop();
    const Cell cur{r, c};
    const int ci = map.index(cur);
    if (closed[ci]) continue;
    closed[ci] = true;
    if (cur == to) break;
    for (Action a : kMoves) {
      const Cell nb = displaced(cur, a);
      if (!map.passable(nb, amulets)) continue;
      const int ni = map.index(nb);
      const int ng = g[ci] + 1;
      if (ng < g[ni]) {
        g[ni] = ng;
        parent[ni] = ci;
        via[ni] = static_cast<std::int8_t>(a);
        open.emplace(ng + manhattan(nb, to), nb.row, nb.col);
      }
    }
  }
  const int ti = map.index(to);
  if (g[ti] == std::numeric_limits<int>::max()) return result;
  result.steps = g[ti];
  if (want_path) {
    for (int i = ti; i != map.index(from); i = parent[i]) result.path.push_back(static_cast<Action>(via[i]));
    std::reverse(result.path.begin(), result.path.end());
  }
  return result;
}

}  // namespace

Planner::Planner(const GameMap& map, const CostConfig& costs) : map_(&map), costs_(costs) {
  for (std::size_t i = 0; i < map.assignments().size(); ++i) {
    point_masses_.push_back(Belief::point_mass(map, static_cast<int>(i)));
  }
}

double Planner::shortest_path_cost(Cell from, Cell to, ColorSet amulets) {
  const auto n = static_cast<std::uint64_t>(map_->cell_count());
  if (!map_->in_bounds(from) || !map_->in_bounds(to)) return kUnreachable;
  const std::uint64_t key =
      (static_cast<std::uint64_t>(map_->index(from)) * n + static_cast<std::uint64_t>(map_->index(to))) * 4 +
      amulets.bits();
  auto it = path_steps_.find(key);
  if (it == path_steps_.end()) {
    it = path_steps_.emplace(key, astar(*map_, from, to, amulets, false).steps).first;
  }
  return it->second < 0 ? kUnreachable : it->second * costs_.move_cost;
}

std::optional<std::vector<Action>> Planner::shortest_path(Cell from, Cell to, ColorSet amulets) const {
  auto r = astar(*map_, from, to, amulets, true);
  if (r.steps < 0) return std::nullopt;
  return std::move(r.path);
}

std::size_t Planner::TourKeyHash::operator()(const TourKey& k) const {
  std::uint64_t h = static_cast<std::uint64_t>(k.at + 1) * 0x9E3779B97F4A7C15ULL;
  h ^= k.visited + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  h ^= k.held + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  h ^= k.live + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

// Optimal expected cost from `position` (a wizard cell when at >= 0) given the
// hypotheses in `live`. Options: walk to the chest if it is reachable, or walk
// to an unvisited candidate wizard of an unheld color and branch on its answer.
double Planner::tour(const Belief& belief, Cell chest, int at, Cell position, std::uint64_t visited, ColorSet held,
                     std::uint64_t live, std::unordered_map<TourKey, double, TourKeyHash>& memo) {
  const TourKey key{at, visited, held.bits(), live};
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  const auto& hyps = map_->assignments();
  double total = 0.0;
  for (std::uint64_t m = live; m; m &= m - 1) total += belief.probs[std::countr_zero(m)];

  double best = shortest_path_cost(position, chest, held);
  for (const Wizard& w : map_->wizards()) {
    if ((visited >> w.id) & 1U) continue;
    if (held.contains(w.color)) continue;
    std::uint64_t yes = 0;
    double mass = 0.0;
    for (std::uint64_t m = live; m; m &= m - 1) {
      const int i = std::countr_zero(m);
      if (hyps[i].holder_of(w.color) == w.id) {
        yes |= std::uint64_t{1} << i;
        mass += belief.probs[i];
      }
    }
    if (!(mass > 0.0)) continue;
    const double walk = shortest_path_cost(position, w.cell, held);
    if (!std::isfinite(walk) || walk >= best) continue;
    const double p = std::min(1.0, mass / total);
    const std::uint64_t no = live & ~yes;
    const std::uint64_t seen = visited | (std::uint64_t{1} << w.id);
    double value = walk + p * tour(belief, chest, w.id, w.cell, seen, held.with(w.color), yes, memo);
    if (no != 0 && p < 1.0) value += (1.0 - p) * tour(belief, chest, w.id, w.cell, seen, held, no, memo);
    best = std::min(best, value);
  }
  memo.emplace(key, best);
  return best;
}

double Planner::expected_cost_from(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief) {
  if (belief.size() != map_->assignments().size()) throw PlanningError("belief does not match the map");
  const Cell chest = map_->chest(goal).cell;
  std::uint64_t live = 0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief.probs[i] > 0.0) live |= std::uint64_t{1} << i;
  }
  if (live == 0) throw PlanningError("belief has no mass");
  std::unordered_map<TourKey, double, TourKeyHash> memo;

  // Standing on an unqueried wizard of an unheld color forces its answer.
  if (auto w = map_->wizard_at(position); w && !amulets.contains(map_->wizard(*w).color)) {
    const Color c = map_->wizard(*w).color;
    std::uint64_t yes = 0;
    double mass = 0.0, total = 0.0;
    for (std::uint64_t m = live; m; m &= m - 1) {
      const int i = std::countr_zero(m);
      total += belief.probs[i];
      if (map_->assignments()[i].holder_of(c) == *w) {
        yes |= std::uint64_t{1} << i;
        mass += belief.probs[i];
      }
    }
    if (mass > 0.0) {
      const double p = std::min(1.0, mass / total);
      const std::uint64_t seen = std::uint64_t{1} << *w;
      double value = p * tour(belief, chest, *w, position, seen, amulets.with(c), yes, memo);
      const std::uint64_t no = live & ~yes;
      if (no != 0 && p < 1.0) value += (1.0 - p) * tour(belief, chest, *w, position, seen, amulets, no, memo);
      return value;
    }
  }
  return tour(belief, chest, -1, position, 0, amulets, live, memo);
}

double Planner::expected_cost(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief) {
  return expected_cost_from(goal, position, amulets, belief);
}

double Planner::plan_cost(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief) {
  const double v = expected_cost_from(goal, position, amulets, belief);
  if (!std::isfinite(v)) throw PlanningError("goal unreachable under all hypotheses");
  return v;
}

QEstimate Planner::q_values(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief) {
  QEstimate q;
  for (Action a : kMoves) {
    Cell next = displaced(position, a);
    if (!map_->passable(next, amulets)) next = position;
    q.cost[static_cast<int>(a)] = costs_.move_cost + expected_cost_from(goal, next, amulets, belief);
  }
  return q;
}

const QEstimate& Planner::known_q_values(ChestLabel goal, Cell position, ColorSet amulets, int assignment) {
  const std::uint64_t key =
      ((static_cast<std::uint64_t>(map_->index(position)) * 4 + amulets.bits()) * 4 + static_cast<int>(goal)) *
          kMaxAssignments +
      static_cast<std::uint64_t>(assignment);
  auto it = known_q_.find(key);
  if (it == known_q_.end()) {
    it = known_q_.emplace(key, q_values(goal, position, amulets, point_masses_.at(assignment))).first;
  }
  return it->second;
}

ColorSet Planner::held_under(int assignment, const std::vector<int>& queried) const {
  ColorSet held;
  const AmuletAssignment& t = map_->assignments().at(assignment);
  for (Color c : kColors) {
    const int h = t.holder_of(c);
    if (h >= 0 && std::find(queried.begin(), queried.end(), h) != queried.end()) held = held.with(c);
  }
  return held;
}

double shortest_path_cost(const GameMap& map, Cell from, Cell to, ColorSet amulets, const CostConfig& costs) {
  Planner p(map, costs);
  return p.shortest_path_cost(from, to, amulets);
}

double plan_cost(const GameMap& map, ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief,
                 const CostConfig& costs) {
  Planner p(map, costs);
  return p.plan_cost(goal, position, amulets, belief);
}

QEstimate q_values(const GameMap& map, ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief,
                   const CostConfig& costs) {
  Planner p(map, costs);
  return p.q_values(goal, position, amulets, belief);
}

}  // namespace mindhunt
