// mindhunt: run, evaluate, replay and serve treasure-hunt episodes.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mindhunt/harness.hpp"
#include "mindhunt/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mindhunt;

namespace {

constexpr int kExitInvalidInput = 2;
constexpr int kExitRuntime = 3;

/// Bad files, maps, specs and model names.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

template <typename F>
auto as_input(F&& f) {
  try {
    return f();
  } catch (const MapError& e) {
    throw InputError(e.what());
  } catch (const IllegalActionError&) {
    throw;
  } catch (const PlanningError&) {
    throw;
  } catch (const InferenceError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(e.what());
  }
}

std::vector<std::string> split_models(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    if (std::find(model_names().begin(), model_names().end(), item) == model_names().end()) {
      throw InputError("unknown model: " + item);
    }
    out.push_back(item);
  }
  if (out.empty()) throw InputError("no models given");
  return out;
}

std::vector<GameMap> load_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json" && e.path().filename() != "spec.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GameMap> maps;
  for (const auto& f : files) {
    maps.push_back(as_input([&] { return load_map(read_json(f.string())); }));
  }
  if (maps.empty()) throw InputError("no maps in " + dir);
  return maps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treasure-hunt social learning engine"};
  app.require_subcommand(1);

  std::string map_path, model = "rational_mentalizing", costs_path, out_path, spec_path, corpus_dir, models_list,
                        log_path, maps_dir, log_dir;
  std::uint64_t seed = 0;
  int seeds = 1, port = 8080, step_limit = 200;
  double beta = kDefaultBeta, npc_beta = 0.0, idle_minutes = 30.0;

  auto* run = app.add_subcommand("run", "Play one episode with an observer model");
  run->add_option("--map", map_path, "Map JSON")->required();
  run->add_option("--model", model, "naive | rational_nonmentalizing | social_mentalizing | rational_mentalizing");
  run->add_option("--costs", costs_path, "Cost JSON {move_cost, observe_cost, starting_points}");
  run->add_option("--seed", seed);
  run->add_option("--beta", beta, "Inference temperature");
  run->add_option("--npc-beta", npc_beta, "Boltzmann-noisy NPC (0: deterministic)");
  run->add_option("--step-limit", step_limit);
  run->add_option("--out", out_path, "Episode log JSON");

  auto* gen = app.add_subcommand("gen-corpus", "Generate a seeded map corpus");
  gen->add_option("--spec", spec_path, "Corpus spec JSON (defaults when omitted)");
  gen->add_option("--out", out_path, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Compare models over a corpus");
  eval->add_option("--corpus", corpus_dir, "Directory of map JSON files")->required();
  eval->add_option("--models", models_list, "Comma-separated model names (default: all)");
  eval->add_option("--seeds", seeds);
  eval->add_option("--costs", costs_path);
  eval->add_option("--beta", beta);
  eval->add_option("--npc-beta", npc_beta);
  eval->add_option("--out", out_path, "Summary CSV; .json and _per_map.csv written alongside")->required();

  auto* rep = app.add_subcommand("replay", "Verify a log and print each turn");
  rep->add_option("--log", log_path, "Episode log JSON")->required();

  auto* serve = app.add_subcommand("serve", "HTTP API for interactive play");
  serve->add_option("--port", port);
  serve->add_option("--maps", maps_dir, "Fixture directory")->required();
  serve->add_option("--log-dir", log_dir, "Write finished session logs here");
  serve->add_option("--idle-minutes", idle_minutes);

  CLI11_PARSE(app, argc, argv);

  try {
    EpisodeConfig config;
    if (!costs_path.empty()) config.costs = as_input([&] { return costs_from_json(read_json(costs_path)); });
    if (!(beta > 0.0)) throw InputError("beta must be positive");
    if (npc_beta < 0.0) throw InputError("npc-beta must be nonnegative");
    config.beta = beta;
    if (npc_beta > 0.0) config.npc_beta = npc_beta;
    config.seed = seed;
    config.step_limit = step_limit;

    if (*run) {
      const GameMap map = as_input([&] { return load_map(read_json(map_path)); });
      auto observer = as_input([&] { return make_observer(model); });
      const EpisodeLog log = run_episode(map, *observer, config);
      const std::string text = log.to_json().dump(2) + "\n";
      if (out_path.empty()) {
        std::cout << text;
      } else {
        write_text(out_path, text);
      }
      std::cerr << map.name() << " " << model << ": " << log.summary.steps << " steps, cost " << log.summary.cost
                << ", " << log.summary.observes << " observes" << (log.summary.goal_achieved ? "" : ", goal NOT reached")
                << "\n";
      return log.summary.goal_achieved ? 0 : kExitRuntime;
    }

    if (*gen) {
      const CorpusSpec spec =
          spec_path.empty() ? CorpusSpec{} : as_input([&] { return CorpusSpec::from_json(read_json(spec_path)); });
      const auto maps = generate_corpus(spec);
      fs::create_directories(out_path);
      for (const auto& m : maps) write_text((fs::path(out_path) / (m.name() + ".json")).string(), map_to_json(m).dump(2) + "\n");
      write_text((fs::path(out_path) / "spec.json").string(), spec.to_json().dump(2) + "\n");
      std::cerr << "wrote " << maps.size() << " maps to " << out_path << "\n";
      return 0;
    }

    if (*eval) {
      const auto maps = load_corpus(corpus_dir);
      const auto models = models_list.empty() ? model_names() : split_models(models_list);
      if (seeds < 1) throw InputError("seeds must be >= 1");
      EvaluationOptions opts;
      opts.config = config;
      opts.config.record_posterior = false;
      opts.seeds = seeds;
      const EvaluationResult result = evaluate(maps, models, opts);
      write_text(out_path, result.summary_csv());
      fs::path base(out_path);
      const std::string stem = (base.parent_path() / base.stem()).string();
      write_text(stem + ".json", result.to_json().dump(2) + "\n");
      write_text(stem + "_per_map.csv", result.per_map_csv());
      std::cout << result.summary_csv();
      return 0;
    }

    if (*rep) {
      const EpisodeLog log = as_input([&] { return EpisodeLog::from_json(read_json(log_path)); });
      const GameMap map = as_input([&] { return load_map(log.map_document); });
      const ReplayResult r = replay(log);
      for (std::size_t i = 0; i < r.states.size(); ++i) {
        if (i > 0) {
          const StepRecord& rec = log.records[i - 1];
          std::cout << "action " << to_string(rec.action);
          if (rec.npc_step) std::cout << "  other " << to_string(rec.npc_step->action);
          std::cout << "\n";
        }
        std::cout << render_ascii(map, r.states[i]) << "\n";
      }
      if (!r.ok) {
        std::cerr << "replay failed: " << r.message << "\n";
        return kExitRuntime;
      }
      std::cout << "replay ok: " << log.records.size() << " records, cost " << log.summary.cost << "\n";
      return 0;
    }

    if (*serve) {
      ServiceOptions opts;
      opts.maps_dir = maps_dir;
      opts.log_dir = log_dir;
      opts.idle_timeout = std::chrono::milliseconds(static_cast<long long>(idle_minutes * 60'000));
      SessionStore store(opts);
      std::cerr << "serving " << store.map_names().size() << " maps on port " << port << "\n";
      return run_server(store, "0.0.0.0", port) ? 0 : kExitRuntime;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
