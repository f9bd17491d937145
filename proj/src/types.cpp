#include "mindhunt/types.hpp"

namespace mindhunt {

std::string_view to_string(Color c) { return c == Color::Blue ? "blue" : "red"; }

std::optional<Color> parse_color(std::string_view s) {
  if (s == "blue") return Color::Blue;
  if (s == "red") return Color::Red;
  return std::nullopt;
}

std::string_view to_string(ChestLabel l) {
  switch (l) {
    case ChestLabel::A: return "A";
    case ChestLabel::B: return "B";
    case ChestLabel::C: return "C";
  }
  return "?";
}

std::optional<ChestLabel> parse_chest_label(std::string_view s) {
  if (s == "A") return ChestLabel::A;
  if (s == "B") return ChestLabel::B;
  if (s == "C") return ChestLabel::C;
  return std::nullopt;
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
    case Action::Observe: return "observe";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view s) {
  if (s == "up") return Action::Up;
  if (s == "down") return Action::Down;
  if (s == "left") return Action::Left;
  if (s == "right") return Action::Right;
  if (s == "observe") return Action::Observe;
  return std::nullopt;
}

Cell displaced(Cell c, Action a) {
  switch (a) {
    case Action::Up: return {c.row - 1, c.col};
    case Action::Down: return {c.row + 1, c.col};
    case Action::Left: return {c.row, c.col - 1};
    case Action::Right: return {c.row, c.col + 1};
    case Action::Observe: return c;
  }
  return c;
}

}  // namespace mindhunt
