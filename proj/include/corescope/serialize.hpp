#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "corescope/infrastructure.hpp"
#include "corescope/resched.hpp"
#include "corescope/scheduling.hpp"
#include "corescope/solver.hpp"

namespace corescope {

using nlohmann::json;

class SchemaError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kSchemaVersion = 1;

// Cells are [row, col], waypoints [row, col, heading], timed waypoints
// [row, col, heading, time].

inline void to_json(json& j, Heading h) { j = std::string(1, heading_char(h)); }
inline void from_json(const json& j, Heading& h) {
  const auto s = j.get<std::string>();
  for (Heading x : kHeadings)
    if (s.size() == 1 && s[0] == heading_char(x)) {
      h = x;
      return;
    }
  throw SchemaError("bad heading '" + s + "'");
}

inline void to_json(json& j, const Cell& c) { j = json::array({c.row, c.col}); }
inline void from_json(const json& j, Cell& c) {
  c.row = j.at(0).get<int>();
  c.col = j.at(1).get<int>();
}

inline void to_json(json& j, const Waypoint& w) { j = json::array({w.cell.row, w.cell.col, w.heading}); }
inline void from_json(const json& j, Waypoint& w) {
  w.cell = {j.at(0).get<int>(), j.at(1).get<int>()};
  w.heading = j.at(2).get<Heading>();
}

inline void to_json(json& j, const TimedWaypoint& w) {
  j = json::array({w.waypoint.cell.row, w.waypoint.cell.col, w.waypoint.heading, w.time});
}
inline void from_json(const json& j, TimedWaypoint& w) {
  w.waypoint.cell = {j.at(0).get<int>(), j.at(1).get<int>()};
  w.waypoint.heading = j.at(2).get<Heading>();
  w.time = j.at(3).get<Time>();
}

inline void to_json(json& j, TrackKind k) { j = kind_name(k); }
inline void from_json(const json& j, TrackKind& k) {
  const auto s = j.get<std::string>();
  for (TrackKind x : kTrackKinds)
    if (s == kind_name(x)) {
      k = x;
      return;
    }
  throw SchemaError("bad track kind '" + s + "'");
}

inline void to_json(json& j, const InfraParams& p) {
  j = {{"width", p.width},
       {"height", p.height},
       {"max_num_cities", p.max_num_cities},
       {"max_rail_between_cities", p.max_rail_between_cities},
       {"max_rail_in_city", p.max_rail_in_city},
       {"number_of_agents", p.number_of_agents},
       {"number_of_shortest_paths_per_train", p.number_of_shortest_paths_per_train},
       {"city_length", p.city_length},
       {"speed_data", p.speed_data},
       {"max_attempts", p.max_attempts}};
}
inline void from_json(const json& j, InfraParams& p) {
  InfraParams d;
  p.width = j.value("width", d.width);
  p.height = j.value("height", d.height);
  p.max_num_cities = j.value("max_num_cities", d.max_num_cities);
  p.max_rail_between_cities = j.value("max_rail_between_cities", d.max_rail_between_cities);
  p.max_rail_in_city = j.value("max_rail_in_city", d.max_rail_in_city);
  p.number_of_agents = j.value("number_of_agents", d.number_of_agents);
  p.number_of_shortest_paths_per_train =
      j.value("number_of_shortest_paths_per_train", d.number_of_shortest_paths_per_train);
  p.city_length = j.value("city_length", d.city_length);
  p.speed_data = j.value("speed_data", d.speed_data);
  p.max_attempts = j.value("max_attempts", d.max_attempts);
}

inline void to_json(json& j, const City& c) {
  j = {{"id", c.id}, {"trunk_row", c.trunk_row}, {"first_col", c.first_col}, {"length", c.length}, {"tracks", c.tracks}};
}
inline void from_json(const json& j, City& c) {
  c.id = j.at("id");
  c.trunk_row = j.at("trunk_row");
  c.first_col = j.at("first_col");
  c.length = j.at("length");
  c.tracks = j.at("tracks");
}

inline void to_json(json& j, const TrainSpec& t) {
  j = {{"id", t.id},         {"origin", t.origin},           {"target", t.target},
       {"speed_den", t.speed_den}, {"origin_city", t.origin_city}, {"target_city", t.target_city}};
}
inline void from_json(const json& j, TrainSpec& t) {
  t.id = j.at("id");
  t.origin = j.at("origin");
  t.target = j.at("target");
  t.speed_den = j.at("speed_den");
  t.origin_city = j.value("origin_city", 0);
  t.target_city = j.value("target_city", 0);
}

inline void to_json(json& j, const TrackGrid& g) {
  json cells = json::array();
  for (int r = 0; r < g.height(); ++r)
    for (int c = 0; c < g.width(); ++c)
      if (const auto& t = g.at({r, c}))
        cells.push_back(json::array({r, c, t->kind, t->rotation, t->mirrored}));
  j = {{"width", g.width()}, {"height", g.height()}, {"cells", std::move(cells)}};
}
inline void from_json(const json& j, TrackGrid& g) {
  g = TrackGrid(j.at("width").get<int>(), j.at("height").get<int>());
  for (const auto& e : j.at("cells")) {
    const Cell c{e.at(0).get<int>(), e.at(1).get<int>()};
    if (!g.contains(c)) throw SchemaError("track cell outside the grid");
    g.set(c, CellType{e.at(2).get<TrackKind>(), e.at(3).get<int>(), e.at(4).get<bool>()});
  }
}

inline void to_json(json& j, const TrainRun& r) {
  j = {{"train", r.train}, {"step_duration", r.step_duration}, {"waypoints", r.waypoints}};
}
inline void from_json(const json& j, TrainRun& r) {
  r.train = j.at("train");
  r.step_duration = j.at("step_duration");
  r.waypoints = j.at("waypoints").get<std::vector<TimedWaypoint>>();
}

inline void to_json(json& j, const Malfunction& m) {
  j = {{"train", m.train}, {"time", m.time}, {"duration", m.duration}};
}
inline void from_json(const json& j, Malfunction& m) {
  m.train = j.at("train");
  m.time = j.at("time");
  m.duration = j.at("duration");
}

inline void to_json(json& j, const CostWeights& w) { j = {{"route_change", w.route_change}, {"lateness", w.lateness}}; }
inline void from_json(const json& j, CostWeights& w) {
  w.route_change = j.value("route_change", CostWeights{}.route_change);
  w.lateness = j.value("lateness", CostWeights{}.lateness);
}

inline void to_json(json& j, const RouteDag& d) {
  j = {{"train", d.train},           {"step_duration", d.step_duration}, {"nodes", d.nodes},
       {"successors", d.successors}, {"source", d.source},               {"sinks", d.sinks}};
}
inline void from_json(const json& j, RouteDag& d) {
  d.train = j.at("train");
  d.step_duration = j.at("step_duration");
  d.nodes = j.at("nodes").get<std::vector<Waypoint>>();
  d.successors = j.at("successors").get<std::vector<std::vector<int>>>();
  d.source = j.at("source");
  d.sinks = j.at("sinks").get<std::vector<int>>();
}

inline void to_json(json& j, const TrainProblem& t) {
  j = {{"train", t.train}, {"dag", t.dag}, {"earliest", t.earliest}, {"latest", t.latest}, {"scheduled", t.scheduled}};
}
inline void from_json(const json& j, TrainProblem& t) {
  t.train = j.at("train");
  t.dag = j.at("dag");
  t.earliest = j.at("earliest").get<std::vector<Time>>();
  t.latest = j.at("latest").get<std::vector<Time>>();
  t.scheduled = j.at("scheduled");
  if (t.earliest.size() != t.dag.nodes.size() || t.latest.size() != t.dag.nodes.size())
    throw SchemaError("window arrays do not match the route DAG");
}

inline void to_json(json& j, TrainScope::Kind k) { j = scope_kind_name(k); }
inline void from_json(const json& j, TrainScope::Kind& k) {
  const auto s = j.get<std::string>();
  for (auto x : {TrainScope::Kind::Full, TrainScope::Kind::Restricted, TrainScope::Kind::Frozen})
    if (s == scope_kind_name(x)) {
      k = x;
      return;
    }
  throw SchemaError("bad scope kind '" + s + "'");
}

inline void to_json(json& j, const TrainScope& s) {
  j = {{"kind", s.kind}};
  if (s.frozen) j["frozen"] = *s.frozen;
  if (s.kind == TrainScope::Kind::Restricted) {
    json edges = json::array();
    for (const auto& [a, b] : s.edges) edges.push_back(json::array({a, b}));
    j["edges"] = std::move(edges);
    j["pinned"] = s.pinned;
  }
}
inline void from_json(const json& j, TrainScope& s) {
  s = {};
  s.kind = j.at("kind");
  if (j.contains("frozen")) s.frozen = j.at("frozen").get<TrainRun>();
  if (j.contains("edges"))
    for (const auto& e : j.at("edges")) s.edges.insert({e.at(0).get<Waypoint>(), e.at(1).get<Waypoint>()});
  if (j.contains("pinned")) s.pinned = j.at("pinned").get<std::vector<TimedWaypoint>>();
  if (s.kind == TrainScope::Kind::Frozen && !s.frozen) throw SchemaError("frozen train scope without a run");
}

inline void to_json(json& j, const Solution& s) { j = {{"cost", s.cost}, {"runs", s.runs}}; }
inline void from_json(const json& j, Solution& s) {
  s.cost = j.at("cost");
  s.runs = j.at("runs").get<std::vector<TrainRun>>();
}

inline void to_json(json& j, const SolveStats& s) {
  j = {{"elapsed_s", s.elapsed_s},     {"nodes_expanded", s.nodes_expanded}, {"branchings", s.branchings},
       {"generated", s.generated},     {"proven", s.proven},                 {"lower_bound", s.lower_bound},
       {"trace", s.trace}};
}
inline void from_json(const json& j, SolveStats& s) {
  s.elapsed_s = j.at("elapsed_s");
  s.nodes_expanded = j.at("nodes_expanded");
  s.branchings = j.at("branchings");
  s.generated = j.value("generated", std::uint64_t{0});
  s.proven = j.at("proven");
  s.lower_bound = j.at("lower_bound");
  s.trace = j.value("trace", decltype(s.trace){});
}

inline void to_json(json& j, SolveStatus s) { j = status_name(s); }
inline void from_json(const json& j, SolveStatus& s) {
  const auto v = j.get<std::string>();
  for (auto x : {SolveStatus::Optimal, SolveStatus::Feasible, SolveStatus::Infeasible, SolveStatus::BudgetExceeded})
    if (v == status_name(x)) {
      s = x;
      return;
    }
  throw SchemaError("bad solve status '" + v + "'");
}

// Top-level documents: {"schema": name, "version": n, ...fields}.

namespace serialize_detail {

inline json document(const char* schema, json body) {
  json j = {{"schema", schema}, {"version", kSchemaVersion}};
  j.update(body);
  return j;
}

inline void expect(const json& j, const char* schema) {
  if (!j.is_object() || j.value("schema", std::string{}) != schema)
    throw SchemaError(std::string("expected a '") + schema + "' document");
  const int v = j.value("version", 0);
  if (v != kSchemaVersion)
    throw SchemaError(std::string(schema) + " version " + std::to_string(v) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
}

}  // namespace serialize_detail

inline json infrastructure_to_json(const Infrastructure& x) {
  return serialize_detail::document("infrastructure", {{"infra_id", x.infra_id},
                                                       {"seed", x.seed},
                                                       {"params", x.params},
                                                       {"grid", x.grid},
                                                       {"cities", x.cities},
                                                       {"trains", x.trains},
                                                       {"attempts", x.attempts}});
}
inline Infrastructure infrastructure_from_json(const json& j) {
  serialize_detail::expect(j, "infrastructure");
  Infrastructure x;
  x.infra_id = j.at("infra_id");
  x.seed = j.at("seed");
  x.params = j.at("params");
  x.grid = j.at("grid");
  x.cities = j.at("cities").get<std::vector<City>>();
  x.trains = j.at("trains").get<std::vector<TrainSpec>>();
  x.attempts = j.value("attempts", 1);
  return x;
}

inline json schedule_to_json(const Schedule& x) {
  return serialize_detail::document("schedule", {{"schedule_id", x.schedule_id},
                                                 {"infra_id", x.infra_id},
                                                 {"seed", x.seed},
                                                 {"horizon", x.horizon},
                                                 {"runs", x.runs}});
}
inline Schedule schedule_from_json(const json& j) {
  serialize_detail::expect(j, "schedule");
  Schedule x;
  x.schedule_id = j.at("schedule_id");
  x.infra_id = j.at("infra_id");
  x.seed = j.at("seed");
  x.horizon = j.at("horizon");
  x.runs = j.at("runs").get<std::vector<TrainRun>>();
  return x;
}

inline json malfunction_to_json(const Malfunction& m) { return serialize_detail::document("malfunction", m); }
inline Malfunction malfunction_from_json(const json& j) {
  serialize_detail::expect(j, "malfunction");
  return j.get<Malfunction>();
}

inline json problem_to_json(const ScopedProblem& p) {
  return serialize_detail::document("problem", {{"scope", p.scope},
                                                {"malfunction", p.malfunction},
                                                {"weights", p.weights},
                                                {"max_window", p.max_window},
                                                {"trains", p.trains}});
}
inline ScopedProblem problem_from_json(const json& j) {
  serialize_detail::expect(j, "problem");
  ScopedProblem p;
  p.scope = j.at("scope");
  p.malfunction = j.at("malfunction");
  p.weights = j.at("weights");
  p.max_window = j.at("max_window");
  p.trains = j.at("trains").get<std::vector<TrainProblem>>();
  return p;
}

inline json directive_to_json(const ScopeDirective& d) {
  json trains = json::array();
  for (const auto& [id, s] : d.trains) {
    json t = s;
    t["train"] = id;
    trains.push_back(std::move(t));
  }
  return serialize_detail::document("directive",
                                    {{"kind", d.kind}, {"uses_solution", d.uses_solution}, {"trains", trains}});
}
inline ScopeDirective directive_from_json(const json& j) {
  serialize_detail::expect(j, "directive");
  ScopeDirective d;
  d.kind = j.at("kind");
  d.uses_solution = j.value("uses_solution", false);
  for (const auto& t : j.at("trains")) d.trains[t.at("train").get<TrainId>()] = t.get<TrainScope>();
  return d;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

}  // namespace corescope
