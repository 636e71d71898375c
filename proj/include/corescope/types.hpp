#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace corescope {

/// Direction of travel on the grid. Order matters: it is the row/column order
/// of every transition matrix and rotation is a cyclic shift over it.
enum class Heading : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Heading, 4> kHeadings{Heading::North, Heading::East, Heading::South,
                                                   Heading::West};

constexpr int to_index(Heading h) { return static_cast<int>(h); }

constexpr Heading heading_from(int i) { return static_cast<Heading>(((i % 4) + 4) % 4); }

/// Quarter turns clockwise.
constexpr Heading turn(Heading h, int quarter_turns) {
  return heading_from(to_index(h) + quarter_turns);
}

constexpr Heading reverse(Heading h) { return turn(h, 2); }

constexpr char heading_char(Heading h) {
  constexpr std::array<char, 4> chars{'N', 'E', 'S', 'W'};
  return chars[static_cast<std::size_t>(to_index(h))];
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Heading parse_heading(char c) {
  switch (c) {
    case 'N': return Heading::North;
    case 'E': return Heading::East;
    case 'S': return Heading::South;
    case 'W': return Heading::West;
    default: throw Error(std::string("invalid heading '") + c + "'");
  }
}

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

constexpr Cell step(Cell c, Heading h) {
  switch (h) {
    case Heading::North: return {c.row - 1, c.col};
    case Heading::East: return {c.row, c.col + 1};
    case Heading::South: return {c.row + 1, c.col};
    case Heading::West: return {c.row, c.col - 1};
  }
  return c;
}

/// A node of the double-point graph: a cell together with the heading a train
/// has when it enters that cell.
struct Waypoint {
  Cell cell;
  Heading heading = Heading::North;
  auto operator<=>(const Waypoint&) const = default;
};

using Time = int;
using TrainId = int;
using Cost = std::int64_t;

inline constexpr Time kTimeInfinity = std::numeric_limits<Time>::max() / 4;

class GenerationFailed : public Error {
 public:
  GenerationFailed(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class InconsistentTransitions : public Error {
 public:
  using Error::Error;
};
class NoPath : public Error {
 public:
  using Error::Error;
};
class Unschedulable : public Error {
 public:
  using Error::Error;
};
class InapplicableMalfunction : public Error {
 public:
  using Error::Error;
};
class InfeasibleFreeze : public Error {
 public:
  using Error::Error;
};
class Infeasible : public Error {
 public:
  using Error::Error;
};
class TooLarge : public Error {
 public:
  using Error::Error;
};
class InvalidRange : public Error {
 public:
  using Error::Error;
};
class EmptyAgenda : public Error {
 public:
  using Error::Error;
};

}  // namespace corescope

template <>
struct std::hash<corescope::Cell> {
  std::size_t operator()(const corescope::Cell& c) const noexcept {
    return std::hash<std::int64_t>{}((static_cast<std::int64_t>(c.row) << 32) ^
                                     static_cast<std::uint32_t>(c.col));
  }
};

template <>
struct std::hash<corescope::Waypoint> {
  std::size_t operator()(const corescope::Waypoint& w) const noexcept {
    return std::hash<corescope::Cell>{}(w.cell) * 4u + static_cast<std::size_t>(w.heading);
  }
};
