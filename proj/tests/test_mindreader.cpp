#include <doctest.h>

#include <cmath>
#include <random>

#include "mindhunt/mindreader.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mindhunt;

namespace {

class Capture final : public NpcPolicy {
 public:
  explicit Capture(NpcPolicy& inner) : inner_(inner) {}
  Action next_action(const WorldState& s) override { return last = inner_.next_action(s); }
  Action last = Action::Up;

 private:
  NpcPolicy& inner_;
};

/// Witnessed steps of the other agent while the main agent observes.
std::vector<NpcStep> witness(const GameMap& m, NpcPolicy& policy, int length) {
  Capture npc(policy);
  WorldState s = initial_state(m);
  std::vector<NpcStep> out;
  while (static_cast<int>(out.size()) < length && !s.agent(Agent::Other).done) {
    s = step(s, m, CostConfig{}, Action::Observe, npc).state;
    const AgentState& o = s.agent(Agent::Other);
    out.push_back({npc.last, o.position, o.last_query, o.done});
  }
  return out;
}

double oracle_p(const std::vector<oracle::WeightedHypothesis>& hs, const GameMap& m, const Hypothesis& h) {
  const AmuletAssignment& a = m.assignments()[h.assignment];
  for (const auto& o : hs) {
    if (o.goal == h.goal && o.holders[0] == a.holder_of(Color::Blue) && o.holders[1] == a.holder_of(Color::Red)) {
      return o.p;
    }
  }
  FAIL("hypothesis missing from the oracle");
  return -1.0;
}

}  // namespace

TEST_CASE("uniform prior") {
  const Posterior t1 = init_posterior(testing::t1());
  REQUIRE(t1.probs.size() == 2);
  CHECK(t1.probs[0] == 0.5);
  CHECK(t1.probs[1] == 0.5);

  for (const GameMap& m : testing::random_maps(10, 4, {10, 12}, {3, 3}, {2, 2})) {
    const Posterior p = init_posterior(m);
    CHECK(p.probs.size() == 18);
    for (double v : p.probs) CHECK(v == doctest::Approx(1.0 / 18).epsilon(1e-14));
  }
  for (const GameMap& m : testing::random_maps(5, 9, {10, 12}, {1, 1}, {1, 1})) {
    CHECK(init_posterior(m).probs.size() == 3);
  }
}

TEST_CASE("incremental update matches direct enumeration") {
  std::mt19937_64 rng(1);
  for (const GameMap& m : testing::random_maps(30, 77)) {
    Planner planner(m, CostConfig{});
    NoisyNpc noisy(planner, m, 2.0, rng());
    const auto steps = witness(m, noisy, 10);
    Posterior post = init_posterior(m);
    NpcView view = npc_view(initial_state(m));
    for (const NpcStep& s : steps) {
      post = update_posterior(post, planner, view, s, 2.0);
      view = advance(view, s);
    }
    CHECK(post.normalized());
    const auto expect = oracle::enumerate_posterior(m, m.start(Agent::Other), steps, 2.0, 2.0);
    for (std::size_t i = 0; i < post.probs.size(); ++i) {
      CHECK(std::abs(post.probs[i] - oracle_p(expect, m, post.hypotheses[i])) <= 1e-9);
    }
  }
}

TEST_CASE("moves toward one wizard concentrate mass on it") {
  // Right from (1,3) is optimal only when w1 (1,5) holds the amulet.
  nlohmann::json doc = testing::t1_document();
  doc["amulets"]["blue"] = 0;
  const GameMap m = load_map(doc);
  Planner planner(m, CostConfig{});
  Posterior post = init_posterior(m);
  NpcView view = npc_view(initial_state(m));
  std::vector<NpcStep> steps;
  for (int i = 0; i < 2; ++i) {
    const NpcStep s = predict_step(m, view, {ChestLabel::A, m.true_assignment_index()}, Action::Right);
    post = update_posterior(post, planner, view, s, 2.0);
    view = advance(view, s);
    steps.push_back(s);
  }
  const auto expect = oracle::enumerate_posterior(m, m.start(Agent::Other), steps, 2.0, 2.0);
  for (std::size_t i = 0; i < post.probs.size(); ++i) {
    CHECK(std::abs(post.probs[i] - oracle_p(expect, m, post.hypotheses[i])) <= 1e-9);
  }
  // The second Right queried w1 and found the amulet.
  CHECK(post.probs[m.true_assignment_index()] == 1.0);

  // Soft evidence alone: after one Right the w1 hypothesis dominates.
  const Posterior one = update_posterior(init_posterior(m), planner, npc_view(initial_state(m)),
                                         predict_step(m, npc_view(initial_state(m)),
                                                      {ChestLabel::A, m.true_assignment_index()}, Action::Right),
                                         2.0);
  CHECK(one.probs[m.true_assignment_index()] > 0.9);
  const Belief b = belief_from_evidence(one, m, {});
  CHECK(b[m.true_assignment_index()] == doctest::Approx(oracle_p(
                                            oracle::enumerate_posterior(m, m.start(Agent::Other),
                                                                        {one.history.back()}, 2.0, 2.0),
                                            m, {ChestLabel::A, m.true_assignment_index()})));
}

TEST_CASE("a move equally good under every hypothesis leaves the posterior unchanged") {
  const GameMap m = testing::fixture("figA1");
  Planner planner(m, CostConfig{});
  const Posterior prior = init_posterior(m);
  const NpcView view = npc_view(initial_state(m));
  for (Action a : kMoves) {
    std::vector<double> lik;
    for (const Hypothesis& h : prior.hypotheses) {
      const ColorSet held = planner.held_under(h.assignment, view.queried);
      lik.push_back(boltzmann_policy(planner.known_q_values(h.goal, view.position, held, h.assignment), 2.0)
                        [static_cast<int>(a)]);
    }
    if (std::all_of(lik.begin(), lik.end(), [&](double l) { return std::abs(l - lik[0]) < 1e-15; })) {
      const Posterior post =
          update_posterior(prior, planner, view, predict_step(m, view, prior.hypotheses[0], a), 2.0);
      for (std::size_t i = 0; i < post.probs.size(); ++i) CHECK(post.probs[i] == doctest::Approx(prior.probs[i]));
    }
  }
}

TEST_CASE("witnessed queries zero exactly the inconsistent hypotheses for any beta") {
  const GameMap m = testing::t1();
  Planner planner(m, CostConfig{});
  WorldState s = initial_state(m);
  s.agent(Agent::Other).position = {1, 4};
  const NpcView view = npc_view(s);
  const NpcStep empty{Action::Right, {1, 5}, WizardQuery{0, false}, false};
  for (double beta : {0.01, 1.0, 2.0, 50.0}) {
    const Posterior post = update_posterior(init_posterior(m), planner, view, empty, beta);
    for (std::size_t i = 0; i < post.probs.size(); ++i) {
      const bool w1_holds = m.assignments()[post.hypotheses[i].assignment].holder_of(Color::Blue) == 0;
      if (w1_holds) {
        CHECK(post.probs[i] == 0.0);
      } else {
        CHECK(post.probs[i] == 1.0);
      }
    }
    const Posterior hard = apply_hard_evidence(init_posterior(m), m, view, empty);
    CHECK(hard.probs == post.probs);
  }
}

TEST_CASE("unexplainable steps raise an inference error") {
  const GameMap m = testing::t1();
  Planner planner(m, CostConfig{});
  const NpcView view = npc_view(initial_state(m));
  const NpcStep teleport{Action::Down, {4, 3}, std::nullopt, false};
  CHECK_THROWS_AS(update_posterior(init_posterior(m), planner, view, teleport, 2.0), InferenceError);
  CHECK_THROWS_AS(apply_hard_evidence(init_posterior(m), m, view, teleport), InferenceError);
}

TEST_CASE("belief from evidence") {
  const GameMap m = testing::t1();
  const Posterior prior = init_posterior(m);
  const Belief none = belief_from_evidence(prior, m, {});
  CHECK(none[0] == 0.5);
  CHECK(none[1] == 0.5);
  const std::vector<WizardQuery> found{{1, true}};
  const Belief b = belief_from_evidence(prior, m, found);
  CHECK(b[m.true_assignment_index()] == 1.0);
  CHECK(b.normalized());
  const std::vector<WizardQuery> contradiction{{1, true}, {1, false}};
  CHECK_THROWS_AS(belief_from_evidence(prior, m, contradiction), InferenceError);
  const std::vector<WizardQuery> both_empty{{0, false}, {1, false}};
  CHECK_THROWS_AS(belief_from_evidence(prior, m, both_empty), InferenceError);
}

TEST_CASE("posterior properties along witnessed sequences") {
  std::mt19937_64 rng(2);
  for (const GameMap& m : testing::random_maps(20, 88)) {
    Planner planner(m, CostConfig{});
    NoisyNpc noisy(planner, m, 1.0, rng());
    const auto steps = witness(m, noisy, 12);
    Posterior post = init_posterior(m);
    NpcView view = npc_view(initial_state(m));
    // Queries the main agent might have made: one arbitrary wizard's true answer.
    const Wizard& w = m.wizard(static_cast<int>(rng() % m.wizards().size()));
    const std::vector<WizardQuery> own{{w.id, m.true_assignment().holder_of(w.color) == w.id}};
    Posterior conditioned_first = condition_on_queries(post, m, own);

    for (const NpcStep& s : steps) {
      post = update_posterior(post, planner, view, s, 2.0);
      conditioned_first = update_posterior(conditioned_first, planner, view, s, 2.0);
      view = advance(view, s);

      CHECK(post.normalized());
      double sum = 0.0;
      for (const Chest& c : m.chests()) sum += post.goal_probability(c.label);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(post.assignment_marginal(m).normalized());
      CHECK(belief_from_evidence(post, m, own).normalized());

      // Hard evidence is exact.
      for (std::size_t i = 0; i < post.probs.size(); ++i) {
        const auto& a = m.assignments()[post.hypotheses[i].assignment];
        for (int q : view.queried) {
          const Wizard& wz = m.wizard(q);
          const bool yielded = m.true_assignment().holder_of(wz.color) == q;
          if ((a.holder_of(wz.color) == q) != yielded) CHECK(post.probs[i] == 0.0);
        }
      }

      // Scaling weights before renormalizing changes nothing.
      Posterior scaled = post;
      for (double& p : scaled.probs) p *= 1e-3;
      normalize(scaled.probs);
      for (std::size_t i = 0; i < post.probs.size(); ++i) CHECK(std::abs(scaled.probs[i] - post.probs[i]) <= 1e-12);

      // Own queries commute with the soft updates.
      const Belief late = belief_from_evidence(post, m, own);
      const Belief early = conditioned_first.assignment_marginal(m);
      for (std::size_t t = 0; t < late.size(); ++t) CHECK(std::abs(late[t] - early[t]) <= 1e-9);
    }
  }
}

TEST_CASE("simulated other agent") {
  const GameMap m = testing::t1();
  Planner planner(m, CostConfig{});
  const NpcView start = npc_view(initial_state(m));
  const Hypothesis truth{ChestLabel::A, m.true_assignment_index()};
  CHECK(simulate_npc(planner, start, truth, 0).empty());

  const auto path = simulate_npc(planner, start, truth, 50);
  const double expect = oracle::known_value(m, ChestLabel::A, start.position, {}, {1, -1}, 2.0);
  CHECK(2.0 * static_cast<double>(path.size()) == expect);
  Cell at = start.position;
  bool passed_w2 = false;
  for (Action a : path) {
    at = displaced(at, a);
    passed_w2 = passed_w2 || at == Cell{3, 1};
    if (at == Cell{4, 3}) CHECK(passed_w2);
  }
  CHECK(at == Cell{5, 3});

  NpcView near = start;
  near.position = {4, 3};
  near.queried = {1};
  const auto last = simulate_npc(planner, near, truth, 3);
  REQUIRE(last.size() == 1);
  CHECK(last[0] == Action::Down);
}
