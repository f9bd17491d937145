#include "mindhunt/belief.hpp"

#include <cmath>
#include <numeric>

namespace mindhunt {

Belief Belief::uniform(const GameMap& map) {
  const auto n = map.assignments().size();
  return Belief{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

Belief Belief::point_mass(const GameMap& map, int assignment) {
  Belief b{std::vector<double>(map.assignments().size(), 0.0)};
  b.probs.at(assignment) = 1.0;
  return b;
}

double Belief::holder_probability(const GameMap& map, int wizard) const {
  const Color c = map.wizard(wizard).color;
  double p = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (map.assignments()[i].holder_of(c) == wizard) p += probs[i];
  }
  return p;
}

bool Belief::normalized(double tol) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

void normalize(std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) throw InferenceError("cannot normalize: zero total mass");
  for (double& w : weights) w /= total;
}

}  // namespace mindhunt
