#pragma once

#include <array>
#include <cstdlib>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "corescope/grid.hpp"
#include "corescope/routing.hpp"

namespace corescope {

struct InfraParams {
  int width = 40;
  int height = 40;
  int max_num_cities = 5;
  int max_rail_between_cities = 1;
  int max_rail_in_city = 2;
  int number_of_agents = 10;
  int number_of_shortest_paths_per_train = 10;
  /// Internal length of a city's parallel tracks, in cells.
  int city_length = 4;
  /// Probability of speed 1, 1/2, 1/3, 1/4.
  std::array<double, 4> speed_data{0.25, 0.25, 0.25, 0.25};
  int max_attempts = 50;

  bool operator==(const InfraParams&) const = default;
};

/// A city: `tracks` parallel east-west tracks below a trunk row. Track k > 0
/// leaves the trunk through a switch, runs k rows below it and rejoins on the
/// other side. The trunk ends in one port per side.
struct City {
  int id = 0;
  int trunk_row = 0;
  int first_col = 0;  // first internal column
  int length = 1;
  int tracks = 1;

  int west_port_col() const { return first_col - tracks - 1; }
  int east_port_col() const { return first_col + length + tracks; }
  Cell west_port() const { return {trunk_row, west_port_col()}; }
  Cell east_port() const { return {trunk_row, east_port_col()}; }
  int last_row() const { return trunk_row + tracks - 1; }
  bool contains(Cell c) const {
    return c.row >= trunk_row && c.row <= last_row() && c.col >= west_port_col() &&
           c.col <= east_port_col();
  }
  /// Cells where trains may start or end: the internal columns of every track.
  std::vector<Cell> stations() const {
    std::vector<Cell> out;
    for (int k = 0; k < tracks; ++k)
      for (int c = first_col; c < first_col + length; ++c) out.push_back({trunk_row + k, c});
    return out;
  }
  bool operator==(const City&) const = default;
};

struct TrainSpec {
  TrainId id = 0;
  Waypoint origin;
  Cell target;
  /// A train of speed 1/n needs n time steps per cell.
  int speed_den = 1;
  int origin_city = 0;
  int target_city = 0;
  bool operator==(const TrainSpec&) const = default;
};

struct Infrastructure {
  std::string infra_id = "0";
  std::uint64_t seed = 0;
  InfraParams params;
  TrackGrid grid;
  std::vector<City> cities;
  std::vector<TrainSpec> trains;
  int attempts = 1;

  const TrainSpec& train(TrainId id) const {
    for (const auto& t : trains)
      if (t.id == id) return t;
    throw Error("unknown train " + std::to_string(id));
  }
  bool operator==(const Infrastructure&) const = default;
};

namespace gen_detail {

/// Accumulates per-cell transition bits while laying bidirectional track.
class TrackLayer {
 public:
  TrackLayer(int width, int height)
      : width_(width), height_(height),
        masks_(static_cast<std::size_t>(width * height), 0),
        reserved_(static_cast<std::size_t>(width * height), 0) {}

  bool inside(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_; }
  TransitionMatrix mask(Cell c) const { return inside(c) ? masks_[idx(c)] : TransitionMatrix{0}; }
  bool reserved(Cell c) const { return reserved_[idx(c)] != 0; }
  void reserve(Cell c) { reserved_[idx(c)] = 1; }

  void add(Cell c, Heading in, Heading out) {
    masks_[idx(c)] |= transition_bit(in, out);
    masks_[idx(c)] |= transition_bit(reverse(out), reverse(in));
  }

  /// Lays a run of cells; headings[i] is the heading entering cells[i] and
  /// exit is the heading leaving the last cell.
  void lay(const std::vector<Cell>& cells, const std::vector<Heading>& headings, Heading exit) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const Heading out = i + 1 < cells.size() ? headings[i + 1] : exit;
      add(cells[i], headings[i], out);
    }
  }

  std::optional<TrackGrid> to_grid() const {
    TrackGrid grid(width_, height_);
    for (int r = 0; r < height_; ++r) {
      for (int c = 0; c < width_; ++c) {
        const auto m = masks_[idx({r, c})];
        if (m == 0) continue;
        auto t = classify(m);
        if (!t) return std::nullopt;
        grid.set({r, c}, t);
      }
    }
    return grid;
  }

 private:
  std::size_t idx(Cell c) const { return static_cast<std::size_t>(c.row * width_ + c.col); }
  int width_;
  int height_;
  std::vector<TransitionMatrix> masks_;
  std::vector<char> reserved_;
};

inline void lay_city(TrackLayer& layer, const City& city) {
  const int y0 = city.trunk_row;
  std::vector<Cell> cells;
  std::vector<Heading> hs;
  for (int c = city.west_port_col(); c <= city.east_port_col(); ++c) {
    cells.push_back({y0, c});
    hs.push_back(Heading::East);
  }
  layer.lay(cells, hs, Heading::East);
  const int x0 = city.first_col;
  const int xe = city.first_col + city.length - 1;
  for (int k = 1; k < city.tracks; ++k) {
    cells.clear();
    hs.clear();
    cells.push_back({y0, x0 - k});
    hs.push_back(Heading::East);
    for (int j = 1; j <= k; ++j) {
      cells.push_back({y0 + j, x0 - k});
      hs.push_back(Heading::South);
    }
    for (int c = x0 - k + 1; c <= xe + k; ++c) {
      cells.push_back({y0 + k, c});
      hs.push_back(Heading::East);
    }
    for (int j = k - 1; j >= 0; --j) {
      cells.push_back({y0 + j, xe + k});
      hs.push_back(Heading::North);
    }
    layer.lay(cells, hs, Heading::East);
  }
  for (int r = y0; r <= city.last_row(); ++r)
    for (int c = city.west_port_col(); c <= city.east_port_col(); ++c) layer.reserve({r, c});
}

inline bool is_perpendicular_straight(TransitionMatrix m, Heading h) {
  // A straight crossed by heading h must run along the other axis.
  return m == transitions_of(TrackKind::Straight, (to_index(h) + 1) % 2);
}

struct Corridor {
  std::vector<Cell> cells;
  std::vector<Heading> headings;
  Heading exit;
  int cost = 0;
};

/// Heading-aware A* from the cell beyond `from_port` (leaving with `out`) to the
/// cell in front of `to_port` (entering it with `in`). Cells may be empty or a
/// perpendicular straight that the corridor crosses without turning.
inline std::optional<Corridor> route_corridor(const TrackLayer& layer, Cell from_port, Heading out,
                                              Cell to_port, Heading in) {
  const Cell start = step(from_port, out);
  const Cell goal = step(to_port, reverse(in));
  auto passable = [&](Cell c, Heading h) {
    if (!layer.inside(c) || layer.reserved(c)) return false;
    const auto m = layer.mask(c);
    return m == 0 || is_perpendicular_straight(m, h);
  };
  if (!passable(start, out) || !passable(goal, in)) return std::nullopt;
  using State = std::pair<Cell, Heading>;
  auto h_of = [&](Cell c) { return 2 * (std::abs(c.row - goal.row) + std::abs(c.col - goal.col)); };
  using Entry = std::tuple<int, int, Cell, Heading>;  // f, g, cell, heading
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::map<State, int> best;
  std::map<State, State> parent;
  open.push({h_of(start), 0, start, out});
  best[{start, out}] = 0;
  while (!open.empty()) {
    auto [f, g, c, h] = open.top();
    open.pop();
    if (best.at({c, h}) < g) continue;
    const bool crossing = layer.mask(c) != 0;
    if (c == goal && (in == h || (!crossing && in != reverse(h)))) {
      Corridor cor;
      cor.exit = in;
      cor.cost = g;
      State s{c, h};
      while (true) {
        cor.cells.push_back(s.first);
        cor.headings.push_back(s.second);
        auto it = parent.find(s);
        if (it == parent.end()) break;
        s = it->second;
      }
      std::reverse(cor.cells.begin(), cor.cells.end());
      std::reverse(cor.headings.begin(), cor.headings.end());
      return cor;
    }
    for (int t : {0, 1, -1}) {
      if (crossing && t != 0) continue;
      const Heading nh = turn(h, t);
      const Cell nc = step(c, nh);
      if (!passable(nc, nh)) continue;
      const int ng = g + 2 + (t != 0 ? 1 : 0) + (layer.mask(nc) != 0 ? 2 : 0);
      auto it = best.find({nc, nh});
      if (it != best.end() && it->second <= ng) continue;
      best[{nc, nh}] = ng;
      parent[{nc, nh}] = {c, h};
      open.push({ng + h_of(nc), ng, nc, nh});
    }
  }
  return std::nullopt;
}

}  // namespace gen_detail

/// Procedurally builds a ring of cities joined by single-track corridors and
/// places the trains. Deterministic in (params, seed).
inline Infrastructure generate_infrastructure(const InfraParams& p, std::uint64_t seed,
                                              std::string infra_id = "0") {
  using namespace gen_detail;
  if (p.max_num_cities < 2) throw Error("max_num_cities must be >= 2");
  if (p.max_rail_in_city < 1 || p.max_rail_between_cities < 1 || p.city_length < 1)
    throw Error("rail counts and city_length must be >= 1");
  if (p.number_of_agents < 1) throw Error("number_of_agents must be >= 1");
  const int tracks = p.max_rail_in_city;
  const int footprint_w = p.city_length + 2 * tracks + 2;
  if (p.width < footprint_w + 2 || p.height < tracks + 2)
    throw GenerationFailed("grid smaller than the minimum city footprint", 0);

  for (int attempt = 1; attempt <= p.max_attempts; ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);

    // Cities, uniformly placed; expanded-by-one rectangles must stay disjoint.
    std::vector<City> cities;
    auto expanded_overlap = [](const City& a, const City& b) {
      return !(a.east_port_col() + 1 < b.west_port_col() - 1 ||
               b.east_port_col() + 1 < a.west_port_col() - 1 || a.last_row() + 1 < b.trunk_row - 1 ||
               b.last_row() + 1 < a.trunk_row - 1);
    };
    std::uniform_int_distribution<int> row_d(1, p.height - tracks - 1);
    std::uniform_int_distribution<int> col_d(tracks + 2, p.width - p.city_length - tracks - 2);
    for (int i = 0; i < p.max_num_cities; ++i) {
      for (int tries = 0; tries < 100; ++tries) {
        City c{static_cast<int>(cities.size()), row_d(rng), col_d(rng), p.city_length, tracks};
        bool ok = std::none_of(cities.begin(), cities.end(),
                               [&](const City& o) { return expanded_overlap(c, o); });
        if (ok) {
          cities.push_back(c);
          break;
        }
      }
    }
    if (cities.size() < 2) continue;

    TrackLayer layer(p.width, p.height);
    for (const auto& c : cities) lay_city(layer, c);

    // Nearest-neighbour tour closed into a ring.
    std::vector<int> tour{0};
    std::vector<char> visited(cities.size(), 0);
    visited[0] = 1;
    auto center = [&](int i) {
      const auto& c = cities[static_cast<std::size_t>(i)];
      return std::pair<double, double>{c.trunk_row + (c.tracks - 1) / 2.0,
                                       c.first_col + (c.length - 1) / 2.0};
    };
    while (tour.size() < cities.size()) {
      const auto [r0, c0] = center(tour.back());
      int best = -1;
      double best_d = 0;
      for (std::size_t j = 0; j < cities.size(); ++j) {
        if (visited[j]) continue;
        const auto [r1, c1] = center(static_cast<int>(j));
        const double d = (r1 - r0) * (r1 - r0) + (c1 - c0) * (c1 - c0);
        if (best < 0 || d < best_d) {
          best = static_cast<int>(j);
          best_d = d;
        }
      }
      visited[static_cast<std::size_t>(best)] = 1;
      tour.push_back(best);
    }

    // Each city has a west (0) and east (1) port; every port serves one corridor.
    std::vector<std::array<char, 2>> port_free(cities.size(), {1, 1});
    bool corridors_ok = true;
    for (std::size_t i = 0; i < tour.size() && corridors_ok; ++i) {
      const auto& a = cities[static_cast<std::size_t>(tour[i])];
      const auto& b = cities[static_cast<std::size_t>(tour[(i + 1) % tour.size()])];
      std::optional<Corridor> chosen;
      int sa_used = -1, sb_used = -1;
      for (int sa = 0; sa < 2; ++sa) {
        if (!port_free[static_cast<std::size_t>(a.id)][static_cast<std::size_t>(sa)]) continue;
        for (int sb = 0; sb < 2; ++sb) {
          if (!port_free[static_cast<std::size_t>(b.id)][static_cast<std::size_t>(sb)]) continue;
          if (a.id == b.id && sa == sb) continue;
          const Cell pa = sa == 0 ? a.west_port() : a.east_port();
          const Heading out = sa == 0 ? Heading::West : Heading::East;
          const Cell pb = sb == 0 ? b.west_port() : b.east_port();
          const Heading in = sb == 0 ? Heading::East : Heading::West;
          auto cor = route_corridor(layer, pa, out, pb, in);
          if (cor && (!chosen || cor->cost < chosen->cost)) {
            chosen = std::move(cor);
            sa_used = sa;
            sb_used = sb;
          }
        }
      }
      if (!chosen) {
        corridors_ok = false;
        break;
      }
      port_free[static_cast<std::size_t>(a.id)][static_cast<std::size_t>(sa_used)] = 0;
      port_free[static_cast<std::size_t>(b.id)][static_cast<std::size_t>(sb_used)] = 0;
      layer.lay(chosen->cells, chosen->headings, chosen->exit);
    }
    if (!corridors_ok) continue;

    auto grid = layer.to_grid();
    if (!grid || !path_consistency_violations(*grid).empty()) continue;
    const TopologyGraph graph = to_graph(*grid);

    Infrastructure infra;
    infra.infra_id = infra_id;
    infra.seed = seed;
    infra.params = p;
    infra.grid = std::move(*grid);
    infra.cities = cities;
    infra.attempts = attempt;

    std::uniform_int_distribution<int> city_d(0, static_cast<int>(cities.size()) - 1);
    std::uniform_int_distribution<int> other_d(0, static_cast<int>(cities.size()) - 2);
    std::discrete_distribution<int> speed_d(p.speed_data.begin(), p.speed_data.end());
    bool trains_ok = true;
    for (int i = 0; i < p.number_of_agents && trains_ok; ++i) {
      const int o = city_d(rng);
      int t = other_d(rng);
      if (t >= o) ++t;
      const auto os = cities[static_cast<std::size_t>(o)].stations();
      const auto ts = cities[static_cast<std::size_t>(t)].stations();
      const Cell oc = os[std::uniform_int_distribution<std::size_t>(0, os.size() - 1)(rng)];
      const Cell tc = ts[std::uniform_int_distribution<std::size_t>(0, ts.size() - 1)(rng)];
      const int den = speed_d(rng) + 1;
      const auto tw = waypoints_at(graph, tc);
      std::size_t best_d = 0;
      Heading best_h = Heading::East;
      for (Heading h : {Heading::East, Heading::West}) {
        if (!graph.find({oc, h})) continue;
        try {
          const auto paths = k_shortest_paths(graph, {oc, h}, tw, 1);
          if (best_d == 0 || paths.front().size() < best_d) {
            best_d = paths.front().size();
            best_h = h;
          }
        } catch (const NoPath&) {
        }
      }
      if (best_d == 0) trains_ok = false;
      infra.trains.push_back({i, {oc, best_h}, tc, den, o, t});
    }
    if (!trains_ok) continue;
    return infra;
  }
  throw GenerationFailed("could not generate infrastructure", p.max_attempts);
}

inline TopologyGraph to_graph(const Infrastructure& infra) { return to_graph(infra.grid); }

/// Union of the k shortest cell-simple paths from the train's origin to any
/// heading at its target cell.
inline RouteDag route_dag_of(const TopologyGraph& graph, const TrainSpec& train, int k) {
  const auto targets = waypoints_at(graph, train.target);
  const auto paths = k_shortest_paths(graph, train.origin, targets, k);
  return dag_from_paths(train.id, train.speed_den, paths);
}

inline RouteDag route_dag_of(const Infrastructure& infra, TrainId train, int k) {
  return route_dag_of(to_graph(infra), infra.train(train), k);
}

}  // namespace corescope
