#pragma once

// Hand-built layouts shared by several test files.

#include <initializer_list>
#include <utility>

#include "corescope/infrastructure.hpp"

namespace fixtures {

using namespace corescope;
using H = Heading;

inline TransitionMatrix moves(std::initializer_list<std::pair<H, H>> ms) {
  TransitionMatrix m = 0;
  for (auto [in, out] : ms) m |= transition_bit(in, out);
  return m;
}

inline void put(TrackGrid& g, Cell c, TransitionMatrix m) {
  const auto t = classify(m);
  if (!t) throw Error("fixture uses a matrix that is no track element");
  g.set(c, *t);
}

/// A five-cell line on row 0 with a passing loop below it:
///
///   (0,0) (0,1) (0,2) (0,3) (0,4)
///         (1,1) (1,2) (1,3)
///
/// (0,1) and (0,3) are switches; the loop is two hops longer than the line.
inline TrackGrid passing_loop_grid() {
  TrackGrid g(5, 2);
  const auto ew = moves({{H::East, H::East}, {H::West, H::West}});
  put(g, {0, 0}, ew);
  put(g, {0, 1}, ew | moves({{H::East, H::South}, {H::North, H::West}}));
  put(g, {0, 2}, ew);
  put(g, {0, 3}, ew | moves({{H::North, H::East}, {H::West, H::South}}));
  put(g, {0, 4}, ew);
  put(g, {1, 1}, moves({{H::South, H::East}, {H::West, H::North}}));
  put(g, {1, 2}, ew);
  put(g, {1, 3}, moves({{H::East, H::North}, {H::South, H::West}}));
  return g;
}

/// Train 0 runs east from (0,0) to (0,4), train 1 west from (0,4) to (0,0).
inline Infrastructure passing_loop() {
  Infrastructure inf;
  inf.grid = passing_loop_grid();
  inf.params.width = 5;
  inf.params.height = 2;
  inf.params.number_of_agents = 2;
  inf.trains = {TrainSpec{0, {{0, 0}, H::East}, {0, 4}, 1, 0, 1}, TrainSpec{1, {{0, 4}, H::West}, {0, 0}, 1, 1, 0}};
  return inf;
}

}  // namespace fixtures
