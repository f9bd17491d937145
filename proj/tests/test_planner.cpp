#include <doctest.h>

#include <cmath>
#include <random>

#include "mindhunt/planner.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mindhunt;

namespace {

std::vector<Cell> open_cells(const GameMap& m) {
  std::vector<Cell> out;
  for (int i = 0; i < m.cell_count(); ++i) {
    if (!m.is_wall(m.cell_at(i))) out.push_back(m.cell_at(i));
  }
  return out;
}

Belief random_belief(const GameMap& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Belief b{std::vector<double>(m.assignments().size())};
  for (double& p : b.probs) p = u(rng) < 0.2 ? 0.0 : u(rng);
  if (std::all_of(b.probs.begin(), b.probs.end(), [](double p) { return p == 0.0; })) b.probs[0] = 1.0;
  normalize(b.probs);
  return b;
}

}  // namespace

TEST_CASE("shortest path examples on T1") {
  const GameMap m = testing::t1();
  Planner p(m, CostConfig{});
  CHECK(p.shortest_path_cost({1, 1}, {1, 5}, {}) == 8.0);
  CHECK(p.shortest_path_cost({2, 2}, {2, 2}, {}) == 0.0);
  CHECK(p.shortest_path_cost({1, 1}, {5, 3}, {}) == kUnreachable);
  CHECK(p.shortest_path_cost({1, 1}, {5, 3}, ColorSet{}.with(Color::Blue)) == 12.0);
}

TEST_CASE("A* matches Dijkstra on random maps") {
  std::mt19937_64 rng(5);
  for (const GameMap& m : testing::random_maps(40, 21)) {
    Planner p(m, CostConfig{});
    const auto cells = open_cells(m);
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    for (int k = 0; k < 25; ++k) {
      const Cell a = cells[pick(rng)], b = cells[pick(rng)];
      const ColorSet held = ColorSet::from_bits(static_cast<std::uint8_t>(k % 4));
      const double expect = oracle::dijkstra(m, a, b, held);
      CHECK(p.shortest_path_cost(a, b, held) == expect);
      const auto path = p.shortest_path(a, b, held);
      CHECK(path.has_value() == std::isfinite(expect));
      if (path) {
        CHECK(2.0 * static_cast<double>(path->size()) == expect);
        Cell at = a;
        for (Action step : *path) {
          at = displaced(at, step);
          CHECK(m.passable(at, held));
        }
        CHECK(at == b);
      }
    }
  }
}

TEST_CASE("plan cost on T1") {
  const GameMap m = testing::t1();
  Planner p(m, CostConfig{});
  const Cell start{1, 1};
  const ColorSet none;
  const ColorSet blue = none.with(Color::Blue);
  const Cell w1{1, 5}, w2{3, 1}, chest{5, 3};

  SUBCASE("point mass needs no contingency") {
    const Belief b = Belief::point_mass(m, m.true_assignment_index());
    CHECK(p.plan_cost(ChestLabel::A, start, none, b) ==
          oracle::dijkstra(m, start, w2, none) + oracle::dijkstra(m, w2, chest, blue));
  }
  SUBCASE("uniform belief is the better of the two tour orders") {
    const auto d = [&](Cell a, Cell b, ColorSet h) { return oracle::dijkstra(m, a, b, h); };
    const double w1_first =
        0.5 * (d(start, w1, none) + d(w1, chest, blue)) + 0.5 * (d(start, w1, none) + d(w1, w2, none) + d(w2, chest, blue));
    const double w2_first =
        0.5 * (d(start, w2, none) + d(w2, chest, blue)) + 0.5 * (d(start, w2, none) + d(w2, w1, none) + d(w1, chest, blue));
    CHECK(p.plan_cost(ChestLabel::A, start, none, Belief::uniform(m)) == doctest::Approx(std::min(w1_first, w2_first)).epsilon(1e-12));
    CHECK(std::min(w1_first, w2_first) == 20.0);
  }
  SUBCASE("holding the amulet makes belief irrelevant") {
    CHECK(p.plan_cost(ChestLabel::A, start, blue, Belief::uniform(m)) == oracle::dijkstra(m, start, chest, blue));
  }
}

TEST_CASE("plan cost matches the visiting-order oracle") {
  std::mt19937_64 rng(17);
  int instances = 0;
  for (const GameMap& m : testing::random_maps(60, 33, {8, 12}, {2, 4}, {1, 2})) {
    Planner p(m, CostConfig{});
    const auto cells = open_cells(m);
    for (const Chest& chest : m.chests()) {
      const auto barrier = std::find_if(m.barriers().begin(), m.barriers().end(), [&](const Barrier& b) {
        return manhattan(b.cell, chest.cell) == 1;
      });
      if (barrier == m.barriers().end()) continue;
      const Color need = barrier->color;
      const ColorSet held = ColorSet{}.with(need == Color::Blue ? Color::Red : Color::Blue);
      Cell from = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
      if (m.wizard_at(from) || m.barrier_at(from) || m.chest_at(from)) continue;
      if (!flood_fill(m, m.start(Agent::Main), ColorSet::all())[m.index(from)]) continue;
      const Belief b = random_belief(m, rng);
      const double expect = oracle::tour_by_orders(m, chest.label, from, held, need, b.probs, 2.0);
      if (!std::isfinite(expect) || std::isfinite(oracle::dijkstra(m, from, chest.cell, held))) continue;
      CHECK(p.plan_cost(chest.label, from, held, b) == doctest::Approx(expect).epsilon(1e-12));
      ++instances;
    }
  }
  CHECK(instances >= 50);
}

TEST_CASE("plan cost lower bound and unobstructed goals") {
  std::mt19937_64 rng(3);
  for (const GameMap& m : testing::random_maps(25, 44)) {
    Planner p(m, CostConfig{});
    const Cell start = m.start(Agent::Main);
    for (const Chest& c : m.chests()) {
      const Belief b = random_belief(m, rng);
      const double cost = p.expected_cost(c.label, start, {}, b);
      double best = oracle::kInf;
      for (std::size_t t = 0; t < b.size(); ++t) {
        if (b[t] <= 0.0) continue;
        const auto& a = m.assignments()[t];
        best = std::min(best, oracle::known_value(m, c.label, start, {},
                                                  {a.holder_of(Color::Blue), a.holder_of(Color::Red)}, 2.0));
      }
      CHECK(cost >= best - 1e-9);
      if (std::isfinite(oracle::dijkstra(m, start, c.cell, {}))) {
        CHECK(cost == oracle::dijkstra(m, start, c.cell, {}));
      }
    }
  }
}

// Learning whether one wizard holds the amulet never raises the expected plan
// cost: sum over both answers of P(answer) * plan_cost(belief | answer) <= plan_cost(belief).
// A single answer can raise it (the near candidate turns out empty).
TEST_CASE("plan cost is monotone in information") {
  std::mt19937_64 rng(8);
  int checked = 0;
  for (const GameMap& m : testing::random_maps(30, 55)) {
    Planner p(m, CostConfig{});
    const Cell start = m.start(Agent::Main);
    for (const Chest& c : m.chests()) {
      const Belief b = random_belief(m, rng);
      const double before = p.expected_cost(c.label, start, {}, b);
      if (!std::isfinite(before)) continue;
      for (const Wizard& w : m.wizards()) {
        Belief yes = b, no = b;
        double py = 0.0, pn = 0.0;
        for (std::size_t t = 0; t < b.size(); ++t) {
          if (m.assignments()[t].holder_of(w.color) == w.id) {
            no.probs[t] = 0.0;
            py += b[t];
          } else {
            yes.probs[t] = 0.0;
            pn += b[t];
          }
        }
        if (py <= 0.0 || pn <= 0.0) continue;
        py /= py + pn;
        normalize(yes.probs);
        normalize(no.probs);
        const double after = py * p.expected_cost(c.label, start, {}, yes) + (1 - py) * p.expected_cost(c.label, start, {}, no);
        CHECK(after <= before + 1e-9);
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("a single elimination can raise plan cost") {
  const GameMap m = testing::t1();
  Planner p(m, CostConfig{});
  const int w1_holds = m.assignments()[0].holder_of(Color::Blue) == 0 ? 0 : 1;
  Belief b{std::vector<double>(2, 0.1)};
  b.probs[w1_holds] = 0.9;
  // Next to the likely candidate w1; hearing that it is empty leaves only the far one.
  const Cell near_w1{1, 4};
  const double before = p.plan_cost(ChestLabel::A, near_w1, {}, b);
  const double after = p.plan_cost(ChestLabel::A, near_w1, {}, Belief::point_mass(m, 1 - w1_holds));
  CHECK(before == doctest::Approx(14.8).epsilon(1e-12));
  CHECK(after == 18.0);
}

TEST_CASE("q values") {
  const GameMap m = testing::t1();
  Planner p(m, CostConfig{});
  const ColorSet blue = ColorSet{}.with(Color::Blue);

  SUBCASE("one step from the chest") {
    const QEstimate q = p.q_values(ChestLabel::A, {4, 3}, blue, Belief::uniform(m));
    CHECK(q[Action::Down] == 2.0);
    // Up walks away and back; the walls on either side are self-loops.
    CHECK(q[Action::Up] == 6.0);
    CHECK(q[Action::Left] == 4.0);
    CHECK(q[Action::Right] == 4.0);
  }
  SUBCASE("blocked move is a self-loop") {
    const Belief b = Belief::uniform(m);
    const QEstimate q = p.q_values(ChestLabel::A, {1, 1}, {}, b);
    CHECK(q[Action::Up] == 2.0 + p.plan_cost(ChestLabel::A, {1, 1}, {}, b));
    CHECK(q[Action::Left] == q[Action::Up]);
  }
  SUBCASE("symmetric moves tie") {
    const QEstimate q = p.q_values(ChestLabel::A, {2, 3}, blue, Belief::uniform(m));
    CHECK(q[Action::Left] == q[Action::Right]);
  }
  SUBCASE("optimal move is consistent with the value") {
    const Belief b = Belief::uniform(m);
    const QEstimate q = p.q_values(ChestLabel::A, {1, 1}, {}, b);
    CHECK(q.min() == p.plan_cost(ChestLabel::A, {1, 1}, {}, b));
  }
}

TEST_CASE("known-holder q values match the product-graph oracle") {
  for (const GameMap& m : testing::random_maps(15, 66)) {
    Planner p(m, CostConfig{});
    const auto cells = open_cells(m);
    for (std::size_t t = 0; t < m.assignments().size(); ++t) {
      const auto& a = m.assignments()[t];
      const oracle::Holders holders{a.holder_of(Color::Blue), a.holder_of(Color::Red)};
      for (std::size_t k = 0; k < cells.size(); k += 7) {
        if (m.barrier_at(cells[k]) || m.wizard_at(cells[k])) continue;
        for (const Chest& c : m.chests()) {
          const auto expect = oracle::known_q(m, c.label, cells[k], {}, holders, 2.0);
          const QEstimate& q = p.known_q_values(c.label, cells[k], {}, static_cast<int>(t));
          for (int i = 0; i < 4; ++i) CHECK(q.cost[i] == expect[i]);
        }
      }
    }
  }
}

TEST_CASE("boltzmann policy") {
  QEstimate q;
  q.cost = {3.0, 4.0, kUnreachable, kUnreachable};
  const auto p = boltzmann_policy(q, 1.0);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(p[2] == 0.0);

  q.cost = {5.0, 5.0, 5.0, 5.0};
  for (double v : boltzmann_policy(q, 2.0)) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  q.cost = {7.0, 6.0, 8.0, 9.0};
  CHECK(boltzmann_policy(q, 100.0)[1] >= 0.999);
  CHECK(argmin_action(q) == Action::Down);

  q.cost = {4.0, 3.0, 3.0, 9.0};
  CHECK(argmin_action(q) == Action::Down);
}

TEST_CASE("boltzmann normalization, argmax and shift invariance") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int k = 0; k < 2000; ++k) {
    QEstimate q;
    for (double& c : q.cost) c = std::round(u(rng)) * 2.0;
    if (k % 5 == 0) q.cost[k % 4] = kUnreachable;
    const double beta = 0.1 + static_cast<double>(k % 30) / 5.0;
    const auto p = boltzmann_policy(q, beta);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    const int best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    CHECK(q.cost[best] == q.min());

    QEstimate shifted = q;
    for (double& c : shifted.cost) c += 1000.0;
    const auto ps = boltzmann_policy(shifted, beta);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(ps[i] - p[i]) <= 1e-12);
  }
}
