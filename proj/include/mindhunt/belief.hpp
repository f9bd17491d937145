#pragma once

#include <vector>

#include "mindhunt/game_map.hpp"

namespace mindhunt {

/// Distribution over amulet assignments, indexed like GameMap::assignments().
struct Belief {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  static Belief uniform(const GameMap& map);
  static Belief point_mass(const GameMap& map, int assignment);

  /// Probability that `wizard` holds its color's amulet.
  double holder_probability(const GameMap& map, int wizard) const;
  /// True when the distribution is nonnegative and sums to 1 within `tol`.
  bool normalized(double tol = 1e-12) const;
};

/// Rescales to unit mass; throws InferenceError on zero mass.
void normalize(std::vector<double>& weights);

}  // namespace mindhunt
