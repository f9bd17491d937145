#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mindhunt {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid map document or map invariant violation.
class MapError : public Error {
 public:
  using Error::Error;
};

class IllegalActionError : public Error {
 public:
  using Error::Error;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};

/// The witnessed evidence is impossible under every live hypothesis.
class InferenceError : public Error {
 public:
  using Error::Error;
};

struct Cell {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

enum class Color : std::uint8_t { Blue = 0, Red = 1 };
inline constexpr std::array<Color, 2> kColors{Color::Blue, Color::Red};
inline constexpr int kColorCount = 2;

std::string_view to_string(Color c);
std::optional<Color> parse_color(std::string_view s);

/// Small set of amulet colors.
class ColorSet {
 public:
  constexpr ColorSet() = default;
  static constexpr ColorSet all() { return ColorSet(0b11); }
  static constexpr ColorSet from_bits(std::uint8_t bits) { return ColorSet(bits & 0b11); }

  constexpr bool contains(Color c) const { return (bits_ >> static_cast<int>(c)) & 1U; }
  constexpr ColorSet with(Color c) const {
    return ColorSet(static_cast<std::uint8_t>(bits_ | (1U << static_cast<int>(c))));
  }
  constexpr ColorSet without(Color c) const {
    return ColorSet(static_cast<std::uint8_t>(bits_ & ~(1U << static_cast<int>(c))));
  }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }

  friend constexpr bool operator==(ColorSet, ColorSet) = default;

 private:
  constexpr explicit ColorSet(std::uint8_t bits) : bits_(bits) {}
  std::uint8_t bits_ = 0;
};

enum class ChestLabel : std::uint8_t { A = 0, B = 1, C = 2 };
inline constexpr std::array<ChestLabel, 3> kChestLabels{ChestLabel::A, ChestLabel::B,
                                                        ChestLabel::C};

std::string_view to_string(ChestLabel l);
std::optional<ChestLabel> parse_chest_label(std::string_view s);

enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3, Observe = 4 };

// Tie-breaking order for movement.
inline constexpr std::array<Action, 4> kMoves{Action::Up, Action::Down, Action::Left,
                                              Action::Right};

inline constexpr bool is_move(Action a) { return a != Action::Observe; }

std::string_view to_string(Action a);
std::optional<Action> parse_action(std::string_view s);

/// Cell reached by moving from `c`; does not consider walls or bounds.
Cell displaced(Cell c, Action a);

enum class Agent : std::uint8_t { Main = 0, Other = 1 };

/// Maximum number of Observe actions per episode.
inline constexpr int kObservationCap = 15;

}  // namespace mindhunt
