#include "mindhunt/game_map.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace mindhunt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw MapError(what); }

std::string describe(Cell c) {
  std::ostringstream os;
  os << "(" << c.row << "," << c.col << ")";
  return os.str();
}

Cell parse_cell(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    fail(std::string("schema violation: ") + field + " must be [row, col]");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) fail(std::string("schema violation: missing field \"") + key + "\"");
  return doc.at(key);
}

}  // namespace

GameMap GameMap::create(MapLayout layout) {
  GameMap m;
  m.name_ = std::move(layout.name);
  m.width_ = layout.width;
  m.height_ = layout.height;
  if (m.width_ <= 0 || m.height_ <= 0) fail("schema violation: empty grid");
  if (static_cast<int>(layout.walls.size()) != m.width_ * m.height_) {
    fail("schema violation: wall mask size mismatch");
  }
  m.walls_ = std::move(layout.walls);
  const int n = m.cell_count();
  m.wizard_index_.assign(n, -1);
  m.barrier_index_.assign(n, -1);
  m.chest_index_.assign(n, -1);

  auto check_floor = [&](Cell c, const std::string& what) {
    if (!m.in_bounds(c)) fail(what + " at " + describe(c) + " is outside the grid");
    if (m.walls_[m.index(c)]) fail(what + " at " + describe(c) + " is inside a wall");
  };
  auto claim = [&](Cell c, const std::string& what) {
    const int i = m.index(c);
    if (m.wizard_index_[i] >= 0 || m.barrier_index_[i] >= 0 || m.chest_index_[i] >= 0) {
      fail("duplicate object cells: " + what + " at " + describe(c));
    }
  };

  if (layout.wizard_cells.size() != layout.wizard_colors.size()) {
    fail("schema violation: wizard colors mismatch");
  }
  if (layout.wizard_cells.size() > 64) fail("too many wizards (at most 64)");
  std::vector<std::size_t> order(layout.wizard_cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return layout.wizard_cells[a] < layout.wizard_cells[b];
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Cell c = layout.wizard_cells[order[k]];
    check_floor(c, "wizard");
    claim(c, "wizard");
    const Wizard w{c, layout.wizard_colors[order[k]], static_cast<int>(k)};
    m.wizard_index_[m.index(c)] = w.id;
    m.by_color_[static_cast<int>(w.color)].push_back(w.id);
    m.wizards_.push_back(w);
  }

  for (const Barrier& b : layout.barriers) {
    check_floor(b.cell, "barrier");
    claim(b.cell, "barrier");
    if (m.by_color_[static_cast<int>(b.color)].empty()) {
      fail("barrier color " + std::string(to_string(b.color)) + " has no wizards");
    }
    m.barrier_index_[m.index(b.cell)] = static_cast<int>(m.barriers_.size());
    m.barriers_.push_back(b);
  }

  if (layout.chests.empty() || layout.chests.size() > 3) fail("map must have between 1 and 3 chests");
  std::set<ChestLabel> labels;
  for (const Chest& c : layout.chests) {
    check_floor(c.cell, "chest");
    claim(c.cell, "chest");
    if (!labels.insert(c.label).second) fail("duplicate chest label " + std::string(to_string(c.label)));
    m.chest_index_[m.index(c.cell)] = static_cast<int>(m.chests_.size());
    m.chests_.push_back(c);
  }
  std::sort(m.chests_.begin(), m.chests_.end(),
            [](const Chest& a, const Chest& b) { return a.label < b.label; });
  for (std::size_t i = 0; i < m.chests_.size(); ++i) m.chest_index_[m.index(m.chests_[i].cell)] = static_cast<int>(i);

  for (int a = 0; a < 2; ++a) {
    const Cell s = layout.starts[a];
    const std::string who = a == 0 ? "main start" : "other start";
    check_floor(s, who);
    if (m.wizard_index_[m.index(s)] >= 0 || m.barrier_index_[m.index(s)] >= 0) {
      fail(who + " at " + describe(s) + " must be a floor or chest cell");
    }
    if (!labels.contains(layout.goals[a])) {
      fail("goal " + std::string(to_string(layout.goals[a])) + " names a missing chest");
    }
  }
  m.starts_ = layout.starts;
  m.goals_ = layout.goals;

  for (Color color : kColors) {
    const auto& holders = layout.amulet_holders[static_cast<int>(color)];
    const auto& members = m.by_color_[static_cast<int>(color)];
    const std::string cname(to_string(color));
    if (members.empty()) {
      if (!holders.empty()) fail("amulet listed for " + cname + " but no " + cname + " wizards exist");
      continue;
    }
    if (holders.empty()) fail("zero amulet holders for " + cname);
    if (holders.size() > 1) fail("multiple amulet holders for " + cname);
    const int h = holders.front();
    if (h < 0 || h >= static_cast<int>(m.wizards_.size()) || m.wizards_[h].color != color) {
      fail("amulet holder for " + cname + " is not a " + cname + " wizard");
    }
    m.truth_.holder[static_cast<int>(color)] = h;
  }

  // Hypothesis space: blue holder major, red holder minor.
  auto options = [&](Color c) {
    std::vector<int> v = m.by_color_[static_cast<int>(c)];
    if (v.empty()) v.push_back(-1);
    return v;
  };
  const auto blue = options(Color::Blue);
  const auto red = options(Color::Red);
  if (blue.size() * red.size() > kMaxAssignments) fail("too many amulet hypotheses");
  for (int b : blue) {
    for (int r : red) {
      AmuletAssignment t;
      t.holder[static_cast<int>(Color::Blue)] = b;
      t.holder[static_cast<int>(Color::Red)] = r;
      if (t == m.truth_) m.truth_index_ = static_cast<int>(m.assignments_.size());
      m.assignments_.push_back(t);
    }
  }

  for (int a = 0; a < 2; ++a) {
    const char* who = a == 0 ? "main" : "other";
    const auto reach = flood_fill(m, m.starts_[a], ColorSet::all());
    for (const Chest& c : m.chests_) {
      if (!reach[m.index(c.cell)]) {
        fail("unreachable chest " + std::string(to_string(c.label)) + " from " + who + " start");
      }
    }
    // Under every assignment, an agent collecting whatever amulets it can
    // reach must be able to open every chest.
    for (std::size_t t = 0; t < m.assignments_.size(); ++t) {
      ColorSet held;
      std::vector<bool> r;
      for (bool grew = true; grew;) {
        grew = false;
        r = flood_fill(m, m.starts_[a], held);
        for (Color col : kColors) {
          const int h = m.assignments_[t].holder_of(col);
          if (h >= 0 && !held.contains(col) && r[m.index(m.wizards_[h].cell)]) {
            held = held.with(col);
            grew = true;
          }
        }
      }
      for (const Chest& c : m.chests_) {
        if (!r[m.index(c.cell)]) {
          fail("unreachable chest " + std::string(to_string(c.label)) + " from " + who +
               " start when the amulets are held by wizards " + std::to_string(m.assignments_[t].holder[0]) +
               "/" + std::to_string(m.assignments_[t].holder[1]));
        }
      }
    }
  }
  return m;
}

std::optional<Color> GameMap::barrier_at(Cell c) const {
  if (!in_bounds(c)) return std::nullopt;
  const int i = barrier_index_[index(c)];
  if (i < 0) return std::nullopt;
  return barriers_[i].color;
}

std::optional<int> GameMap::wizard_at(Cell c) const {
  if (!in_bounds(c)) return std::nullopt;
  const int i = wizard_index_[index(c)];
  if (i < 0) return std::nullopt;
  return i;
}

std::optional<ChestLabel> GameMap::chest_at(Cell c) const {
  if (!in_bounds(c)) return std::nullopt;
  const int i = chest_index_[index(c)];
  if (i < 0) return std::nullopt;
  return chests_[i].label;
}

bool GameMap::passable(Cell c, ColorSet amulets) const {
  if (is_wall(c)) return false;
  const int b = barrier_index_[index(c)];
  return b < 0 || amulets.contains(barriers_[b].color);
}

const Chest& GameMap::chest(ChestLabel label) const {
  for (const Chest& c : chests_) {
    if (c.label == label) return c;
  }
  throw MapError("no chest " + std::string(to_string(label)));
}

bool GameMap::has_chest(ChestLabel label) const {
  return std::any_of(chests_.begin(), chests_.end(),
                     [&](const Chest& c) { return c.label == label; });
}

MapLayout GameMap::layout() const {
  MapLayout l;
  l.name = name_;
  l.width = width_;
  l.height = height_;
  l.walls = walls_;
  for (const Wizard& w : wizards_) {
    l.wizard_cells.push_back(w.cell);
    l.wizard_colors.push_back(w.color);
  }
  l.barriers = barriers_;
  l.chests = chests_;
  l.starts = starts_;
  l.goals = goals_;
  for (Color c : kColors) {
    if (truth_.holder_of(c) >= 0) l.amulet_holders[static_cast<int>(c)] = {truth_.holder_of(c)};
  }
  return l;
}

GameMap GameMap::with_scenario(std::string name, std::array<ChestLabel, 2> goals,
                               AmuletAssignment truth) const {
  MapLayout l = layout();
  l.name = std::move(name);
  l.goals = goals;
  for (Color c : kColors) {
    auto& h = l.amulet_holders[static_cast<int>(c)];
    h.clear();
    if (truth.holder_of(c) >= 0) h.push_back(truth.holder_of(c));
  }
  return create(std::move(l));
}

std::vector<bool> flood_fill(const GameMap& map, Cell from, ColorSet amulets) {
  std::vector<bool> seen(map.cell_count(), false);
  if (!map.passable(from, amulets)) return seen;
  std::deque<Cell> frontier{from};
  seen[map.index(from)] = true;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    for (Action a : kMoves) {
      const Cell n = displaced(c, a);
      if (!map.passable(n, amulets) || seen[map.index(n)]) continue;
      seen[map.index(n)] = true;
      frontier.push_back(n);
    }
  }
  return seen;
}

GameMap load_map(const json& doc) {
  if (!doc.is_object()) fail("schema violation: map document must be an object");
  MapLayout l;
  try {
    l.name = require(doc, "name").get<std::string>();
    const json& grid = require(doc, "grid");
    if (!grid.is_array() || grid.empty()) fail("schema violation: grid must be a non-empty array");
    l.height = static_cast<int>(grid.size());
    l.width = static_cast<int>(grid[0].get<std::string>().size());
    l.walls.assign(static_cast<std::size_t>(l.width) * l.height, false);
    for (int r = 0; r < l.height; ++r) {
      const auto row = grid[r].get<std::string>();
      if (static_cast<int>(row.size()) != l.width) fail("schema violation: ragged grid row " + std::to_string(r));
      for (int c = 0; c < l.width; ++c) {
        switch (row[c]) {
          case '#': l.walls[r * l.width + c] = true; break;
          case '.': break;
          case 'b':
            l.wizard_cells.push_back({r, c});
            l.wizard_colors.push_back(Color::Blue);
            break;
          case 'r':
            l.wizard_cells.push_back({r, c});
            l.wizard_colors.push_back(Color::Red);
            break;
          default:
            fail(std::string("schema violation: unknown grid symbol '") + row[c] + "'");
        }
      }
    }
    if (doc.contains("barriers")) {
      for (const json& b : doc.at("barriers")) {
        const auto color = parse_color(require(b, "color").get<std::string>());
        if (!color) fail("schema violation: barrier color must be blue or red");
        l.barriers.push_back({parse_cell(require(b, "cell"), "barrier.cell"), *color});
      }
    }
    for (const json& c : require(doc, "chests")) {
      const auto label = parse_chest_label(require(c, "label").get<std::string>());
      if (!label) fail("schema violation: chest label must be A, B or C");
      l.chests.push_back({parse_cell(require(c, "cell"), "chest.cell"), *label});
    }
    const json& starts = require(doc, "starts");
    l.starts[0] = parse_cell(require(starts, "main"), "starts.main");
    l.starts[1] = parse_cell(require(starts, "other"), "starts.other");
    const json& goals = require(doc, "goals");
    for (int a = 0; a < 2; ++a) {
      const auto g = parse_chest_label(require(goals, a == 0 ? "main" : "other").get<std::string>());
      if (!g) fail("schema violation: goal must be A, B or C");
      l.goals[a] = *g;
    }
    if (doc.contains("amulets")) {
      for (auto it = doc.at("amulets").begin(); it != doc.at("amulets").end(); ++it) {
        const auto color = parse_color(it.key());
        if (!color) fail("schema violation: unknown amulet color " + it.key());
        auto& holders = l.amulet_holders[static_cast<int>(*color)];
        if (it.value().is_array()) {
          for (const json& h : it.value()) holders.push_back(h.get<int>());
        } else {
          holders.push_back(it.value().get<int>());
        }
      }
    }
  } catch (const json::exception& e) {
    fail(std::string("schema violation: ") + e.what());
  }
  return GameMap::create(std::move(l));
}

GameMap load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MapError("cannot open map file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw MapError("schema violation: " + path + ": " + e.what());
  }
  return load_map(doc);
}

std::vector<std::string> grid_rows(const GameMap& map) {
  std::vector<std::string> rows(map.height(), std::string(map.width(), '.'));
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (map.is_wall({r, c})) rows[r][c] = '#';
    }
  }
  for (const Wizard& w : map.wizards()) rows[w.cell.row][w.cell.col] = w.color == Color::Blue ? 'b' : 'r';
  return rows;
}

nlohmann::json map_to_json(const GameMap& map, bool reveal_hidden) {
  json doc;
  doc["name"] = map.name();
  doc["grid"] = grid_rows(map);
  doc["barriers"] = json::array();
  for (const Barrier& b : map.barriers()) {
    doc["barriers"].push_back({{"cell", {b.cell.row, b.cell.col}}, {"color", to_string(b.color)}});
  }
  doc["chests"] = json::array();
  for (const Chest& c : map.chests()) {
    doc["chests"].push_back({{"cell", {c.cell.row, c.cell.col}}, {"label", to_string(c.label)}});
  }
  doc["starts"] = {{"main", {map.start(Agent::Main).row, map.start(Agent::Main).col}},
                   {"other", {map.start(Agent::Other).row, map.start(Agent::Other).col}}};
  if (reveal_hidden) {
    doc["amulets"] = json::object();
    for (Color c : kColors) {
      if (map.true_assignment().holder_of(c) >= 0) doc["amulets"][std::string(to_string(c))] = map.true_assignment().holder_of(c);
    }
    doc["goals"] = {{"main", to_string(map.goal(Agent::Main))}, {"other", to_string(map.goal(Agent::Other))}};
  } else {
    doc["goals"] = {{"main", to_string(map.goal(Agent::Main))}};
  }
  return doc;
}

}  // namespace mindhunt
