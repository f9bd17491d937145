#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindhunt/mindreader.hpp"
#include "mindhunt/observers.hpp"
#include "mindhunt/planner.hpp"
#include "mindhunt/world.hpp"

namespace mindhunt {

struct EpisodeConfig {
  CostConfig costs;
  double beta = kDefaultBeta;          // inference temperature
  std::optional<double> npc_beta;      // unset: deterministic optimal NPC
  int step_limit = 200;
  std::uint64_t seed = 0;
  bool record_posterior = true;

  nlohmann::json to_json() const;
  static EpisodeConfig from_json(const nlohmann::json& j);
  /// 16 hex digits identifying every field that influences an episode.
  std::string hash() const;
};

/// Expert NPC: follows the full-knowledge optimal plan toward its goal.
class OptimalNpc final : public NpcPolicy {
 public:
  OptimalNpc(Planner& planner, const GameMap& map);
  Action next_action(const WorldState& state) override;

 private:
  Planner* planner_;
  Hypothesis truth_;
};

/// Boltzmann-noisy expert, seeded.
class NoisyNpc final : public NpcPolicy {
 public:
  NoisyNpc(Planner& planner, const GameMap& map, double beta, std::uint64_t seed);
  Action next_action(const WorldState& state) override;

 private:
  Planner* planner_;
  Hypothesis truth_;
  double beta_;
  std::mt19937_64 rng_;
};

/// Plays back recorded NPC moves.
class ScriptedNpc final : public NpcPolicy {
 public:
  explicit ScriptedNpc(std::vector<Action> actions) : actions_(std::move(actions)) {}
  Action next_action(const WorldState& state) override;

 private:
  std::vector<Action> actions_;
  std::size_t next_ = 0;
};

struct StepRecord {
  int turn = 0;  // turn at which the decision was taken
  Action action = Action::Up;
  std::optional<NpcStep> npc_step;
  std::optional<WizardQuery> own_query;
  nlohmann::json decision;  // diagnostics, opaque to replay
  double cumulative_cost = 0.0;
  std::string digest;  // state after the step
};

struct EpisodeSummary {
  int steps = 0;
  int moves = 0;
  int observes = 0;
  double cost = 0.0;
  bool goal_achieved = false;
  bool step_limit_hit = false;
};

struct EpisodeLog {
  std::string map_name;
  std::string model;
  EpisodeConfig config;
  nlohmann::json map_document;
  std::string initial_digest;
  std::vector<StepRecord> records;
  EpisodeSummary summary;

  nlohmann::json to_json() const;
  static EpisodeLog from_json(const nlohmann::json& j);
};

/// {"t","model","action","U_obs","U_act","T_star", ...}; "posterior" is added by the caller.
nlohmann::json decision_json(const ObserverDecision& d, int t, const std::string& model);

/// Runs the main agent under `observer` until it reaches its goal or the step limit.
EpisodeLog run_episode(const GameMap& map, Observer& observer, const EpisodeConfig& config);
EpisodeLog run_episode(const GameMap& map, std::string_view model, const EpisodeConfig& config);

/// Incremental episode driver shared by run_episode and interactive sessions.
class EpisodeRunner {
 public:
  EpisodeRunner(const GameMap& map, std::string model, const EpisodeConfig& config);

  const WorldState& state() const { return state_; }
  const EpisodeLog& log() const { return log_; }
  const Posterior& social() const { return social_; }
  const Posterior& evidence() const { return evidence_; }
  bool done() const { return state_.agent(Agent::Main).done; }
  Planner& planner() { return planner_; }
  Situation situation();

  /// Applies `action` (validated against legal_actions) and records `decision`.
  const Observation& apply(Action action, nlohmann::json decision = nlohmann::json::object());
  const Observation& last_observation() const { return last_obs_; }
  void finish(bool step_limit_hit);

 private:
  const GameMap& map_;
  EpisodeConfig config_;
  Planner planner_;
  std::unique_ptr<NpcPolicy> npc_;
  WorldState state_;
  Posterior social_;
  Posterior evidence_;
  EpisodeLog log_;
  Observation last_obs_;
  Action last_npc_action_ = Action::Up;
};

struct ReplayResult {
  bool ok = true;
  std::string message;
  std::vector<WorldState> states;  // initial state then one per record
};

/// Re-applies the log's actions through step() and compares digests.
ReplayResult replay(const EpisodeLog& log);

/// ASCII rendering of one state; hidden information is not drawn.
std::string render_ascii(const GameMap& map, const WorldState& state);

struct CorpusSpec {
  int map_count = 50;
  std::pair<int, int> size{12, 12};
  std::pair<int, int> blue_wizards{2, 4};
  std::pair<int, int> red_wizards{1, 2};
  int chest_count = 3;
  double wall_density = 0.12;
  // Barrier per chest slot ("red", "blue" or "none"); labels are shuffled over slots.
  std::vector<std::string> barriers{"red", "blue", "blue"};
  int min_wizard_gap = 3;  // Manhattan distance between any two wizards
  // "uniform": main goal drawn over all chests; "uncertain": only chests whose
  // barrier color has at least two candidate holders.
  std::string goal_scheme = "uniform";
  std::uint64_t seed = 2025;
  bool paired = true;  // emit same-goal and different-goal variant per layout

  nlohmann::json to_json() const;
  static CorpusSpec from_json(const nlohmann::json& j);
};

/// Seeded, reproducible corpus; with `paired` each layout appears as a
/// same-goal and a different-goal variant (in that order). Throws Error when
/// a layout needs more than 10,000 rejections.
std::vector<GameMap> generate_corpus(const CorpusSpec& spec);

struct ModelSummary {
  std::string model;
  int episodes = 0;
  double mean_steps = 0.0;
  double se_steps = 0.0;
  double mean_cost = 0.0;
  double se_cost = 0.0;
  double mean_observes = 0.0;
  double goal_rate = 0.0;
  int max_observes = 0;
};

struct EpisodeRow {
  std::string map;
  std::string model;
  std::uint64_t seed = 0;
  EpisodeSummary summary;
};

struct EvaluationResult {
  std::vector<EpisodeRow> episodes;  // (map, model, seed) order
  std::vector<ModelSummary> models;  // in requested model order
  std::vector<EpisodeLog> logs;      // parallel to episodes when kept

  std::string summary_csv() const;
  std::string per_map_csv() const;
  nlohmann::json to_json() const;
};

struct EvaluationOptions {
  EpisodeConfig config;
  int seeds = 1;
  int threads = 0;  // 0: MINDHUNT_THREADS or hardware concurrency
  bool keep_logs = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

EvaluationResult evaluate(const std::vector<GameMap>& corpus, const std::vector<std::string>& models,
                          const EvaluationOptions& options);

/// Mean and standard error (sample SD / sqrt(n)); SE is 0 for n < 2.
std::pair<double, double> mean_and_se(const std::vector<double>& values);

int default_thread_count();

}  // namespace mindhunt
