#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindhunt/types.hpp"

namespace mindhunt {

struct Wizard {
  Cell cell;
  Color color = Color::Blue;
  int id = 0;  // index in (row, col) order over all wizards
};

struct Barrier {
  Cell cell;
  Color color = Color::Blue;
};

struct Chest {
  Cell cell;
  ChestLabel label = ChestLabel::A;
};

/// Which wizard holds each color's amulet; -1 when the color has no wizards.
struct AmuletAssignment {
  std::array<int, kColorCount> holder{-1, -1};

  int holder_of(Color c) const { return holder[static_cast<int>(c)]; }
  friend bool operator==(const AmuletAssignment&, const AmuletAssignment&) = default;
};

/// Unvalidated map description. GameMap::create() checks it.
struct MapLayout {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<bool> walls;  // row-major
  std::vector<Cell> wizard_cells;
  std::vector<Color> wizard_colors;
  std::vector<Barrier> barriers;
  std::vector<Chest> chests;
  std::array<Cell, 2> starts{};
  std::array<ChestLabel, 2> goals{ChestLabel::A, ChestLabel::A};
  // Holder candidates per color as listed in the document; exactly one is valid.
  std::array<std::vector<int>, kColorCount> amulet_holders;
};

/// Immutable, validated treasure-hunt layout.
class GameMap {
 public:
  /// Validates every layout invariant; throws MapError on violation.
  static GameMap create(MapLayout layout);

  const std::string& name() const { return name_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_;
  }
  int index(Cell c) const { return c.row * width_ + c.col; }
  Cell cell_at(int index) const { return {index / width_, index % width_}; }

  bool is_wall(Cell c) const { return !in_bounds(c) || walls_[index(c)]; }
  std::optional<Color> barrier_at(Cell c) const;
  std::optional<int> wizard_at(Cell c) const;
  std::optional<ChestLabel> chest_at(Cell c) const;

  /// True when an agent holding `amulets` may stand on `c`.
  bool passable(Cell c, ColorSet amulets) const;

  const std::vector<Wizard>& wizards() const { return wizards_; }
  const Wizard& wizard(int id) const { return wizards_.at(id); }
  const std::vector<int>& wizards_of(Color c) const { return by_color_[static_cast<int>(c)]; }
  const std::vector<Barrier>& barriers() const { return barriers_; }
  const std::vector<Chest>& chests() const { return chests_; }
  const Chest& chest(ChestLabel label) const;
  bool has_chest(ChestLabel label) const;

  Cell start(Agent a) const { return starts_[static_cast<int>(a)]; }
  ChestLabel goal(Agent a) const { return goals_[static_cast<int>(a)]; }
  const AmuletAssignment& true_assignment() const { return truth_; }

  /// Every amulet assignment consistent with the wizard layout, in canonical order.
  const std::vector<AmuletAssignment>& assignments() const { return assignments_; }
  int true_assignment_index() const { return truth_index_; }

  /// Copy with different goals and amulet holders; layout unchanged.
  GameMap with_scenario(std::string name, std::array<ChestLabel, 2> goals,
                        AmuletAssignment truth) const;

  MapLayout layout() const;

 private:
  GameMap() = default;

  std::string name_;
  int width_ = 0;
  int height_ = 0;
  std::vector<bool> walls_;
  std::vector<Wizard> wizards_;
  std::array<std::vector<int>, kColorCount> by_color_;
  std::vector<Barrier> barriers_;
  std::vector<Chest> chests_;
  std::array<Cell, 2> starts_{};
  std::array<ChestLabel, 2> goals_{};
  AmuletAssignment truth_;
  std::vector<AmuletAssignment> assignments_;
  int truth_index_ = 0;
  // Per-cell lookup: -1 none, otherwise index into the corresponding vector.
  std::vector<int> wizard_index_;
  std::vector<int> barrier_index_;
  std::vector<int> chest_index_;
};

/// Upper bound on the hypothesis space over amulet assignments.
inline constexpr std::size_t kMaxAssignments = 64;

/// Parses and validates a map document; throws MapError.
GameMap load_map(const nlohmann::json& document);
GameMap load_map_file(const std::string& path);

/// Serializes a map. With `reveal_hidden` false the amulet holders and the
/// other agent's goal are omitted.
nlohmann::json map_to_json(const GameMap& map, bool reveal_hidden = true);

/// Grid rows as stored in the document (walls, floor, wizards only).
std::vector<std::string> grid_rows(const GameMap& map);

/// Cells reachable from `from` moving through cells passable with `amulets`.
std::vector<bool> flood_fill(const GameMap& map, Cell from, ColorSet amulets);

}  // namespace mindhunt
