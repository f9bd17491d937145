#pragma once

#include <array>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mindhunt/belief.hpp"
#include "mindhunt/game_map.hpp"
#include "mindhunt/world.hpp"

namespace mindhunt {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Expected remaining cost per movement action, indexed like kMoves.
struct QEstimate {
  std::array<double, 4> cost{kUnreachable, kUnreachable, kUnreachable, kUnreachable};

  double operator[](Action a) const { return cost[static_cast<int>(a)]; }
  double min() const;
};

/// P(a) proportional to exp(-beta * Q(a)), evaluated with max-subtraction.
/// Actions with infinite Q get probability 0.
std::array<double, 4> boltzmann_policy(const QEstimate& q, double beta);

/// First action (in Up, Down, Left, Right order) whose Q is within `tol` of the minimum.
Action argmin_action(const QEstimate& q, double tol = 1e-9);

/// Shortest paths and contingent wizard-tour plans over one map.
///
/// Holds memo tables and is therefore not thread-safe; use one per episode
/// (or per thread).
class Planner {
 public:
  Planner(const GameMap& map, const CostConfig& costs);

  const GameMap& map() const { return *map_; }
  const CostConfig& costs() const { return costs_; }

  /// Minimal path cost from `from` to `to` when barriers of `amulets` colors
  /// are passable; kUnreachable if no path exists. Memoized A*.
  double shortest_path_cost(Cell from, Cell to, ColorSet amulets);

  /// The A* path itself. Ties are broken by Up, Down, Left, Right then by
  /// lower (row, col).
  std::optional<std::vector<Action>> shortest_path(Cell from, Cell to, ColorSet amulets) const;

  /// Expected cost of the optimal contingent wizard tour followed by the walk
  /// to the goal chest. kUnreachable when no hypothesis admits a plan.
  double expected_cost(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief);

  /// Same as expected_cost but throws PlanningError when unreachable.
  double plan_cost(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief);

  /// Step cost plus expected plan cost from each successor. Blocked moves are
  /// self-loops.
  QEstimate q_values(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief);

  /// Q-values of an agent that knows the amulet assignment. Cached.
  const QEstimate& known_q_values(ChestLabel goal, Cell position, ColorSet amulets, int assignment);

  /// Colors held by an agent that visited `queried` wizards under `assignment`.
  ColorSet held_under(int assignment, const std::vector<int>& queried) const;

 private:
  struct TourKey {
    int at;
    std::uint64_t visited;
    std::uint8_t held;
    std::uint64_t live;
    friend bool operator==(const TourKey&, const TourKey&) = default;
  };
  struct TourKeyHash {
    std::size_t operator()(const TourKey& k) const;
  };

  double tour(const Belief& belief, Cell chest, int at, Cell position, std::uint64_t visited, ColorSet held,
              std::uint64_t live, std::unordered_map<TourKey, double, TourKeyHash>& memo);
  double expected_cost_from(ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief);

  const GameMap* map_;
  CostConfig costs_;
  std::unordered_map<std::uint64_t, int> path_steps_;  // -1 unreachable
  std::unordered_map<std::uint64_t, QEstimate> known_q_;
  std::vector<Belief> point_masses_;
};

/// Stateless conveniences mirroring the Planner members.
double shortest_path_cost(const GameMap& map, Cell from, Cell to, ColorSet amulets,
                          const CostConfig& costs = {});
double plan_cost(const GameMap& map, ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief,
                 const CostConfig& costs = {});
QEstimate q_values(const GameMap& map, ChestLabel goal, Cell position, ColorSet amulets, const Belief& belief,
                   const CostConfig& costs = {});

}  // namespace mindhunt
