#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mindhunt/game_map.hpp"
#include "mindhunt/harness.hpp"

namespace testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(MINDHUNT_FIXTURE_DIR) + "/" + name + ".json";
}

inline mindhunt::GameMap fixture(const std::string& name) { return mindhunt::load_map_file(fixture_path(name)); }

inline nlohmann::json t1_document() {
  return nlohmann::json::parse(R"({
    "name": "T1",
    "grid": ["#######", "#....b#", "#.....#", "#b....#", "###.###", "###.###", "#######"],
    "barriers": [{"cell": [4, 3], "color": "blue"}],
    "chests": [{"cell": [5, 3], "label": "A"}],
    "starts": {"main": [1, 1], "other": [1, 3]},
    "amulets": {"blue": 1},
    "goals": {"main": "A", "other": "A"}
  })");
}

inline mindhunt::GameMap t1() { return mindhunt::load_map(t1_document()); }

/// Random maps of mixed sizes from the corpus generator (unpaired).
inline std::vector<mindhunt::GameMap> random_maps(int count, std::uint64_t seed, std::pair<int, int> size = {7, 12},
                                                  std::pair<int, int> blue = {2, 4},
                                                  std::pair<int, int> red = {1, 2}, int chests = 3) {
  mindhunt::CorpusSpec spec;
  spec.map_count = count;
  spec.size = size;
  spec.blue_wizards = blue;
  spec.red_wizards = red;
  spec.chest_count = chests;
  spec.barriers.resize(chests, "blue");
  if (chests >= 1) spec.barriers[0] = "red";
  spec.min_wizard_gap = 2;
  spec.seed = seed;
  spec.paired = false;
  return mindhunt::generate_corpus(spec);
}

}  // namespace testing
