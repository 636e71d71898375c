#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corescope/types.hpp"

namespace corescope {

/// The eight basic railway elements.
enum class TrackKind : std::uint8_t {
  Straight,
  SimpleSwitch,
  DiamondCrossing,
  SingleSlip,
  DoubleSlip,
  SymmetricalSwitch,
  DeadEnd,
  Curve,
};

inline constexpr std::array<TrackKind, 8> kTrackKinds{
    TrackKind::Straight,   TrackKind::SimpleSwitch,      TrackKind::DiamondCrossing,
    TrackKind::SingleSlip, TrackKind::DoubleSlip,        TrackKind::SymmetricalSwitch,
    TrackKind::DeadEnd,    TrackKind::Curve,
};

inline const char* kind_name(TrackKind k) {
  switch (k) {
    case TrackKind::Straight: return "straight";
    case TrackKind::SimpleSwitch: return "simple_switch";
    case TrackKind::DiamondCrossing: return "diamond_crossing";
    case TrackKind::SingleSlip: return "single_slip";
    case TrackKind::DoubleSlip: return "double_slip";
    case TrackKind::SymmetricalSwitch: return "symmetrical_switch";
    case TrackKind::DeadEnd: return "dead_end";
    case TrackKind::Curve: return "curve";
  }
  return "?";
}

inline TrackKind parse_kind(const std::string& s) {
  for (TrackKind k : kTrackKinds) {
    if (s == kind_name(k)) return k;
  }
  throw Error("unknown track kind '" + s + "'");
}

/// 4x4 boolean matrix packed into 16 bits: bit (4 * incoming + outgoing).
using TransitionMatrix = std::uint16_t;

constexpr TransitionMatrix transition_bit(Heading in, Heading out) {
  return static_cast<TransitionMatrix>(1u << (4 * to_index(in) + to_index(out)));
}

constexpr bool allows(TransitionMatrix m, Heading in, Heading out) {
  return (m & transition_bit(in, out)) != 0;
}

constexpr bool accepts(TransitionMatrix m, Heading in) {
  return ((m >> (4 * to_index(in))) & 0xFu) != 0;
}

constexpr TransitionMatrix rotate(TransitionMatrix m, int quarter_turns) {
  TransitionMatrix out = 0;
  for (Heading in : kHeadings) {
    for (Heading o : kHeadings) {
      if (allows(m, in, o)) out |= transition_bit(turn(in, quarter_turns), turn(o, quarter_turns));
    }
  }
  return out;
}

namespace detail {
constexpr TransitionMatrix bits(std::initializer_list<std::pair<Heading, Heading>> moves) {
  TransitionMatrix m = 0;
  for (auto [in, out] : moves) m |= transition_bit(in, out);
  return m;
}
using H = Heading;
}  // namespace detail

/// Unrotated element: straights run north-south, curves join the south and east sides.
constexpr TransitionMatrix base_transitions(TrackKind kind) {
  using detail::bits;
  using detail::H;
  constexpr TransitionMatrix straight = bits({{H::North, H::North}, {H::South, H::South}});
  constexpr TransitionMatrix curve = bits({{H::North, H::East}, {H::West, H::South}});
  constexpr TransitionMatrix diamond = straight | rotate(straight, 1);
  switch (kind) {
    case TrackKind::Straight: return straight;
    case TrackKind::SimpleSwitch: return straight | curve;
    case TrackKind::DiamondCrossing: return diamond;
    case TrackKind::SingleSlip: return diamond | curve;
    case TrackKind::DoubleSlip: return diamond | curve | rotate(curve, 2);
    case TrackKind::SymmetricalSwitch: return curve | bits({{H::North, H::West}, {H::East, H::South}});
    case TrackKind::DeadEnd: return bits({{H::North, H::South}});
    case TrackKind::Curve: return curve;
  }
  return 0;
}

/// Reflection across the north-south axis (east and west swap).
constexpr TransitionMatrix mirror(TransitionMatrix m) {
  auto flip = [](Heading h) {
    return h == Heading::East ? Heading::West : h == Heading::West ? Heading::East : h;
  };
  TransitionMatrix out = 0;
  for (Heading in : kHeadings) {
    for (Heading o : kHeadings) {
      if (allows(m, in, o)) out |= transition_bit(flip(in), flip(o));
    }
  }
  return out;
}

/// Mirroring is applied before rotation. Only the chiral elements (simple
/// switch, single slip) produce new matrices when mirrored.
constexpr TransitionMatrix transitions_of(TrackKind kind, int rotation, bool mirrored = false) {
  const TransitionMatrix base = base_transitions(kind);
  return rotate(mirrored ? mirror(base) : base, rotation);
}

struct CellType {
  TrackKind kind = TrackKind::Straight;
  int rotation = 0;
  bool mirrored = false;
  bool operator==(const CellType&) const = default;
  TransitionMatrix transitions() const { return transitions_of(kind, rotation, mirrored); }
};

/// Inverse of transitions_of; symmetric elements resolve to the first
/// unmirrored, smallest rotation.
inline std::optional<CellType> classify(TransitionMatrix m) {
  for (bool mirrored : {false, true}) {
    for (TrackKind k : kTrackKinds) {
      for (int r = 0; r < 4; ++r) {
        if (transitions_of(k, r, mirrored) == m) return CellType{k, r, mirrored};
      }
    }
  }
  return std::nullopt;
}

/// Rectangular grid of optional track elements, row-major.
class TrackGrid {
 public:
  TrackGrid() = default;
  TrackGrid(int width, int height)
      : width_(width), height_(height), cells_(static_cast<std::size_t>(width * height)) {}

  int width() const { return width_; }
  int height() const { return height_; }

  bool contains(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_; }

  const std::optional<CellType>& at(Cell c) const { return cells_[index(c)]; }
  void set(Cell c, std::optional<CellType> t) { cells_[index(c)] = t; }

  TransitionMatrix transitions(Cell c) const {
    if (!contains(c)) return 0;
    const auto& t = at(c);
    return t ? t->transitions() : TransitionMatrix{0};
  }

  std::size_t track_cell_count() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](const auto& t) { return t.has_value(); }));
  }

  bool operator==(const TrackGrid&) const = default;

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row * width_ + c.col); }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::optional<CellType>> cells_;
};

/// Directed double-point graph: one node per (cell, accepted incoming heading),
/// one edge per legal single-cell move.
struct TopologyGraph {
  std::vector<Waypoint> nodes;                // sorted
  std::vector<std::vector<int>> successors;   // sorted by node index
  std::vector<std::vector<int>> predecessors;
  std::unordered_map<Waypoint, int> index;
  std::size_t edge_count = 0;

  std::optional<int> find(const Waypoint& w) const {
    auto it = index.find(w);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
  bool has_edge(const Waypoint& from, const Waypoint& to) const {
    auto a = find(from);
    auto b = find(to);
    if (!a || !b) return false;
    const auto& s = successors[static_cast<std::size_t>(*a)];
    return std::binary_search(s.begin(), s.end(), *b);
  }
};

/// Builds the double-point graph. Moves that leave the grid or run into an
/// empty cell are open track ends and produce no edge; a move into a track
/// cell that does not accept the heading is a generation bug.
inline TopologyGraph to_graph(const TrackGrid& grid) {
  TopologyGraph g;
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      const Cell cell{r, c};
      const TransitionMatrix m = grid.transitions(cell);
      for (Heading h : kHeadings) {
        if (accepts(m, h)) g.nodes.push_back({cell, h});
      }
    }
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) g.index.emplace(g.nodes[i], static_cast<int>(i));
  g.successors.resize(g.nodes.size());
  g.predecessors.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Waypoint w = g.nodes[i];
    const TransitionMatrix m = grid.transitions(w.cell);
    for (Heading out : kHeadings) {
      if (!allows(m, w.heading, out)) continue;
      const Cell next = step(w.cell, out);
      const TransitionMatrix nm = grid.transitions(next);
      if (nm == 0) continue;
      if (!accepts(nm, out)) {
        throw InconsistentTransitions("cell (" + std::to_string(next.row) + "," +
                                      std::to_string(next.col) + ") does not accept heading " +
                                      heading_char(out));
      }
      const int j = g.index.at({next, out});
      g.successors[i].push_back(j);
      g.predecessors[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
      ++g.edge_count;
    }
  }
  for (auto& s : g.successors) std::sort(s.begin(), s.end());
  for (auto& p : g.predecessors) std::sort(p.begin(), p.end());
  return g;
}

/// Strict check used on generated layouts: every allowed outgoing move must
/// land on a track cell accepting that heading (no open ends anywhere).
inline std::vector<std::string> path_consistency_violations(const TrackGrid& grid) {
  std::vector<std::string> out;
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      const Cell cell{r, c};
      const TransitionMatrix m = grid.transitions(cell);
      for (Heading in : kHeadings) {
        for (Heading o : kHeadings) {
          if (!allows(m, in, o)) continue;
          const Cell next = step(cell, o);
          if (!accepts(grid.transitions(next), o)) {
            out.push_back("(" + std::to_string(r) + "," + std::to_string(c) + ") " +
                          heading_char(in) + "->" + heading_char(o) + " leads nowhere");
          }
        }
      }
    }
  }
  return out;
}

}  // namespace corescope
