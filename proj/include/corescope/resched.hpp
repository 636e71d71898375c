#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "corescope/infrastructure.hpp"
#include "corescope/routing.hpp"
#include "corescope/scheduling.hpp"

namespace corescope {

/// Train `train` halts in its current cell during [time, time + duration).
struct Malfunction {
  TrainId train = 0;
  Time time = 0;
  Time duration = 1;
  bool operator==(const Malfunction&) const = default;
};

/// Malfunction of a given train after it has been active for
/// earliest_malfunction steps. It is vacuous when the train has already
/// arrived by then.
inline Malfunction malfunction_for(const Schedule& schedule, TrainId train, Time earliest_malfunction,
                                   Time duration) {
  if (duration <= 0) throw Error("malfunction duration must be > 0");
  if (earliest_malfunction < 0) throw Error("earliest_malfunction must be >= 0");
  return {train, schedule.run(train).departure() + earliest_malfunction, duration};
}

inline bool is_vacuous(const Malfunction& m, const Schedule& schedule) {
  return m.time >= schedule.run(m.train).arrival();
}

/// Uniform train draw; trains whose run is not longer than
/// earliest_malfunction are redrawn at most max_draws times.
inline Malfunction draw_malfunction(const Schedule& schedule, Time earliest_malfunction, Time duration,
                                    std::uint64_t seed, int max_draws = 100) {
  if (schedule.runs.empty()) throw Error("draw_malfunction: empty schedule");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, schedule.runs.size() - 1);
  for (int i = 0; i < max_draws; ++i) {
    const auto& run = schedule.runs[pick(rng)];
    if (run.arrival() - run.departure() > earliest_malfunction)
      return malfunction_for(schedule, run.train, earliest_malfunction, duration);
  }
  throw InapplicableMalfunction("no train active for more than " + std::to_string(earliest_malfunction) +
                                " steps after " + std::to_string(max_draws) + " draws");
}

struct CostWeights {
  Cost route_change = 30;  // rho
  Cost lateness = 1;       // delta
  bool operator==(const CostWeights&) const = default;
};

/// Waypoints of `run` that are not on `scheduled`.
inline int route_deviation(const TrainRun& run, const TrainRun& scheduled) {
  std::set<Waypoint> on;
  for (const auto& w : scheduled.waypoints) on.insert(w.waypoint);
  int n = 0;
  for (const auto& w : run.waypoints) n += on.count(w.waypoint) ? 0 : 1;
  return n;
}

inline Cost train_cost(const TrainRun& run, const TrainRun& scheduled, const CostWeights& w) {
  return w.lateness * std::max<Cost>(0, run.arrival() - scheduled.arrival()) +
         w.route_change * route_deviation(run, scheduled);
}

inline Cost cost(const std::vector<TrainRun>& runs, const Schedule& schedule, const CostWeights& w) {
  Cost c = 0;
  for (const auto& r : runs) c += train_cost(r, schedule.run(r.train), w);
  return c;
}

/// One train's re-scheduling freedom: a route DAG and an entry-time window
/// per DAG node. A node with earliest == latest is pinned.
struct TrainProblem {
  TrainId train = 0;
  RouteDag dag;
  std::vector<Time> earliest;
  std::vector<Time> latest;
  TrainRun scheduled;

  int step_duration() const { return dag.step_duration; }
  bool pinned(int v) const {
    return earliest[static_cast<std::size_t>(v)] == latest[static_cast<std::size_t>(v)];
  }
  /// 1 where the node is not on the scheduled path.
  std::vector<int> deviation() const {
    std::vector<int> d(dag.nodes.size(), 1);
    for (const auto& w : scheduled.waypoints)
      if (auto v = dag.find(w.waypoint)) d[static_cast<std::size_t>(*v)] = 0;
    return d;
  }
  bool fully_pinned() const {
    for (std::size_t v = 0; v < dag.nodes.size(); ++v)
      if (earliest[v] != latest[v]) return false;
    return dag.edge_count() + 1 == dag.nodes.size();
  }
  bool operator==(const TrainProblem&) const = default;
};

struct ScopedProblem {
  std::string scope = "online_unrestricted";
  Malfunction malfunction;
  CostWeights weights;
  Time max_window = 60;
  std::vector<TrainProblem> trains;  // ordered by train id

  const TrainProblem& train(TrainId id) const {
    for (const auto& t : trains)
      if (t.train == id) return t;
    throw Error("problem has no train " + std::to_string(id));
  }
  bool operator==(const ScopedProblem&) const = default;
};

namespace resched_detail {

/// Restricts dag to the given nodes and edges (by waypoint), then prunes.
inline RouteDag restrict_dag(const RouteDag& dag, const std::set<Waypoint>& nodes,
                             const std::set<std::pair<Waypoint, Waypoint>>& edges) {
  std::set<Waypoint> sinks;
  for (int s : dag.sinks)
    if (nodes.count(dag.nodes[static_cast<std::size_t>(s)])) sinks.insert(dag.nodes[static_cast<std::size_t>(s)]);
  std::set<Waypoint> keep = nodes;
  keep.insert(dag.nodes[static_cast<std::size_t>(dag.source)]);
  auto out = detail::build_dag(dag.train, dag.step_duration, keep, edges,
                               dag.nodes[static_cast<std::size_t>(dag.source)], sinks);
  return prune_dag(out);
}

/// Forward earliest-time propagation over the DAG starting from lower bounds.
inline std::vector<Time> propagate_earliest(const RouteDag& dag, std::vector<Time> lower) {
  const auto order = topological_order(dag);
  if (!order) throw Error("route graph has a cycle");
  std::vector<Time> e(dag.nodes.size(), kTimeInfinity);
  e[static_cast<std::size_t>(dag.source)] = lower[static_cast<std::size_t>(dag.source)];
  for (int v : *order) {
    const auto vi = static_cast<std::size_t>(v);
    if (e[vi] == kTimeInfinity) continue;
    e[vi] = std::max(e[vi], lower[vi]);
    for (int w : dag.successors[vi]) {
      auto& ew = e[static_cast<std::size_t>(w)];
      ew = std::min(ew, e[vi] + dag.step_duration);
    }
  }
  return e;
}

}  // namespace resched_detail

/// The unrestricted problem after the malfunction. Every train gets the
/// union of its scheduled path and its k shortest paths. Entries at or before
/// the malfunction time are realized and pinned; only nodes reachable from a
/// train's current node remain. Earliest times follow from the halt;
/// latest = earliest + max_window.
inline ScopedProblem build_full_problem(const Infrastructure& infra, const Schedule& schedule,
                                        const Malfunction& m, const CostWeights& weights, int k,
                                        Time max_window) {
  if (m.duration <= 0) throw Error("malfunction duration must be > 0");
  if (max_window < 0) throw Error("max_window must be >= 0");
  const TopologyGraph graph = to_graph(infra);
  ScopedProblem prob;
  prob.malfunction = m;
  prob.weights = weights;
  prob.max_window = max_window;
  for (const auto& run : schedule.runs) {
    const TrainSpec& spec = infra.train(run.train);
    const int n = spec.speed_den;
    std::vector<Path> paths{run.path()};
    for (auto& p : k_shortest_paths(graph, spec.origin, waypoints_at(graph, spec.target), k))
      if (p != paths.front()) paths.push_back(std::move(p));
    const RouteDag full = dag_from_paths(run.train, n, paths);

    // Realized prefix: waypoints entered at or before the malfunction time.
    std::size_t realized = 0;
    while (realized < run.waypoints.size() && run.waypoints[realized].time <= m.time) ++realized;

    std::set<Waypoint> nodes;
    std::set<std::pair<Waypoint, Waypoint>> edges;
    for (std::size_t i = 0; i < realized; ++i) {
      nodes.insert(run.waypoints[i].waypoint);
      if (i + 1 < realized) edges.insert({run.waypoints[i].waypoint, run.waypoints[i + 1].waypoint});
    }
    if (realized == 0) {
      nodes.insert(full.nodes.begin(), full.nodes.end());
      for (std::size_t v = 0; v < full.nodes.size(); ++v)
        for (int w : full.successors[v]) edges.insert({full.nodes[v], full.nodes[static_cast<std::size_t>(w)]});
    } else if (realized < run.waypoints.size()) {
      const int cur = *full.find(run.waypoints[realized - 1].waypoint);
      std::vector<int> stack{cur};
      std::set<int> seen{cur};
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        nodes.insert(full.nodes[static_cast<std::size_t>(v)]);
        for (int w : full.successors[static_cast<std::size_t>(v)]) {
          edges.insert({full.nodes[static_cast<std::size_t>(v)], full.nodes[static_cast<std::size_t>(w)]});
          if (seen.insert(w).second) stack.push_back(w);
        }
      }
    }
    TrainProblem tp;
    tp.train = run.train;
    tp.scheduled = run;
    tp.dag = resched_detail::restrict_dag(full, nodes, edges);

    std::vector<Time> lower(tp.dag.nodes.size(), 0);
    lower[static_cast<std::size_t>(tp.dag.source)] = run.departure();
    for (std::size_t i = 0; i < realized; ++i)
      lower[static_cast<std::size_t>(*tp.dag.find(run.waypoints[i].waypoint))] = run.waypoints[i].time;
    if (run.train == m.train) {
      if (realized == 0) {
        lower[static_cast<std::size_t>(tp.dag.source)] = std::max(run.departure(), m.time + m.duration);
      } else if (realized < run.waypoints.size()) {
        const auto& cur = run.waypoints[realized - 1];
        const int cv = *tp.dag.find(cur.waypoint);
        for (int w : tp.dag.successors[static_cast<std::size_t>(cv)])
          lower[static_cast<std::size_t>(w)] = cur.time + n + m.duration;
      }
    }
    tp.earliest = resched_detail::propagate_earliest(tp.dag, lower);
    tp.latest.resize(tp.earliest.size());
    std::set<Waypoint> prefix;
    for (std::size_t i = 0; i < realized; ++i) prefix.insert(run.waypoints[i].waypoint);
    for (std::size_t v = 0; v < tp.earliest.size(); ++v)
      tp.latest[v] = prefix.count(tp.dag.nodes[v]) ? tp.earliest[v] : tp.earliest[v] + max_window;
    prob.trains.push_back(std::move(tp));
  }
  std::sort(prob.trains.begin(), prob.trains.end(),
            [](const TrainProblem& a, const TrainProblem& b) { return a.train < b.train; });
  return prob;
}

/// How a scope restricts one train.
struct TrainScope {
  enum class Kind { Full, Restricted, Frozen };
  Kind kind = Kind::Full;
  /// Frozen: the run the train must follow exactly.
  std::optional<TrainRun> frozen;
  /// Restricted: allowed edges (by waypoint) and pinned (waypoint, time) pairs.
  std::set<std::pair<Waypoint, Waypoint>> edges;
  std::vector<TimedWaypoint> pinned;
  bool operator==(const TrainScope&) const = default;
};

inline const char* scope_kind_name(TrainScope::Kind k) {
  switch (k) {
    case TrainScope::Kind::Full: return "full";
    case TrainScope::Kind::Restricted: return "restricted";
    case TrainScope::Kind::Frozen: return "frozen";
  }
  return "?";
}

struct ScopeDirective {
  std::string kind = "online_unrestricted";
  /// Offline scopers read the unrestricted re-schedule.
  bool uses_solution = false;
  std::map<TrainId, TrainScope> trains;  // missing trains are Full

  const TrainScope* find(TrainId id) const {
    auto it = trains.find(id);
    return it == trains.end() ? nullptr : &it->second;
  }
  std::vector<TrainId> flexible_trains() const {
    std::vector<TrainId> out;
    for (const auto& [id, s] : trains)
      if (s.kind != TrainScope::Kind::Frozen) out.push_back(id);
    return out;
  }
  bool operator==(const ScopeDirective&) const = default;
};

namespace resched_detail {

inline std::string where(const TrainProblem& tp, const TimedWaypoint& w) {
  return "train " + std::to_string(tp.train) + " at (" + std::to_string(w.waypoint.cell.row) + "," +
         std::to_string(w.waypoint.cell.col) + ")" + heading_char(w.waypoint.heading) + " t=" +
         std::to_string(w.time);
}

inline void check_in_window(const TrainProblem& tp, const TimedWaypoint& w) {
  const auto v = tp.dag.find(w.waypoint);
  if (!v) throw InfeasibleFreeze(where(tp, w) + " is not in the route graph");
  const auto vi = static_cast<std::size_t>(*v);
  if (w.time < tp.earliest[vi] || w.time > tp.latest[vi])
    throw InfeasibleFreeze(where(tp, w) + " is outside [" + std::to_string(tp.earliest[vi]) + "," +
                           std::to_string(tp.latest[vi]) + "]");
}

}  // namespace resched_detail

inline TrainProblem freeze_train(const TrainProblem& tp, const TrainRun& run) {
  if (run.waypoints.empty()) throw InfeasibleFreeze("empty frozen run");
  const std::size_t len = run.waypoints.size();
  int last = -1;
  for (const auto& w : run.waypoints) {
    const auto found = tp.dag.find(w.waypoint);
    if (!found) throw InfeasibleFreeze(resched_detail::where(tp, w) + " is not in the route graph");
    const int v = *found;
    const auto vi = static_cast<std::size_t>(v);
    if (w.time < tp.earliest[vi] || w.time > tp.latest[vi])
      throw InfeasibleFreeze(resched_detail::where(tp, w) + " is outside [" + std::to_string(tp.earliest[vi]) + "," +
                             std::to_string(tp.latest[vi]) + "]");
    if (last >= 0) {
      const auto& s = tp.dag.successors[static_cast<std::size_t>(last)];
      if (!std::binary_search(s.begin(), s.end(), v))
        throw InfeasibleFreeze("frozen run of train " + std::to_string(tp.train) + " leaves the route graph");
    }
    last = v;
  }
  if (run.waypoints.front().waypoint != tp.dag.nodes[static_cast<std::size_t>(tp.dag.source)] || !tp.dag.is_sink(last))
    throw InfeasibleFreeze("frozen run of train " + std::to_string(tp.train) + " is not source to sink");

  // The run is a chain; its DAG numbers the waypoints in sorted order.
  std::vector<std::size_t> order(len);
  for (std::size_t i = 0; i < len; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return run.waypoints[a].waypoint < run.waypoints[b].waypoint; });
  std::vector<int> rank(len);
  for (std::size_t k = 0; k < len; ++k) rank[order[k]] = static_cast<int>(k);
  TrainProblem out;
  out.train = tp.train;
  out.scheduled = tp.scheduled;
  RouteDag& dag = out.dag;
  dag.train = tp.dag.train;
  dag.step_duration = tp.dag.step_duration;
  dag.nodes.resize(len);
  dag.successors.resize(len);
  out.earliest.resize(len);
  out.latest.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const auto k = static_cast<std::size_t>(rank[i]);
    if (k > 0 && run.waypoints[order[k - 1]].waypoint == run.waypoints[i].waypoint)
      throw InfeasibleFreeze("frozen run of train " + std::to_string(tp.train) + " revisits a waypoint");
    dag.nodes[k] = run.waypoints[i].waypoint;
    out.earliest[k] = out.latest[k] = run.waypoints[i].time;
    if (i + 1 < len) dag.successors[k] = {rank[i + 1]};
  }
  dag.source = rank.front();
  dag.sinks = {rank.back()};
  return out;
}

/// Keeps only the allowed edges, pins the given entries and re-derives
/// windows inside the full ones.
inline TrainProblem restrict_train(const TrainProblem& tp, const std::set<std::pair<Waypoint, Waypoint>>& allowed,
                                   const std::vector<TimedWaypoint>& pinned, Time max_window) {
  for (const auto& p : pinned) resched_detail::check_in_window(tp, p);
  const auto& nodes = tp.dag.nodes;
  const auto& succ = tp.dag.successors;
  auto sub = sub_dag(tp.dag, [&](std::size_t v, std::size_t i) {
    return allowed.count({nodes[v], nodes[static_cast<std::size_t>(succ[v][i])]}) > 0;
  });
  TrainProblem out;
  out.train = tp.train;
  out.scheduled = tp.scheduled;
  out.dag = std::move(sub.dag);
  const std::size_t n = out.dag.nodes.size();
  std::vector<Time> full_e(n), full_l(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto fv = static_cast<std::size_t>(sub.original[v]);
    full_e[v] = tp.earliest[fv];
    full_l[v] = tp.latest[fv];
  }
  std::vector<std::optional<Time>> pin(n);
  for (const auto& p : pinned)
    if (auto v = out.dag.find(p.waypoint)) pin[static_cast<std::size_t>(*v)] = p.time;
  std::vector<Time> lower = full_e;
  for (std::size_t v = 0; v < n; ++v)
    if (pin[v]) lower[v] = *pin[v];
  const auto e = resched_detail::propagate_earliest(out.dag, lower);
  out.earliest.resize(n);
  out.latest.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (pin[v]) {
      out.earliest[v] = out.latest[v] = *pin[v];
    } else {
      out.earliest[v] = std::max(full_e[v], e[v]);
      out.latest[v] = std::min(full_l[v], out.earliest[v] + max_window);
    }
  }
  return out;
}

inline ScopedProblem apply_scope(const ScopedProblem& full, const ScopeDirective& directive) {
  ScopedProblem out;
  out.scope = directive.kind;
  out.malfunction = full.malfunction;
  out.weights = full.weights;
  out.max_window = full.max_window;
  out.trains.reserve(full.trains.size());
  for (const auto& tp : full.trains) {
    const TrainScope* s = directive.find(tp.train);
    if (!s || s->kind == TrainScope::Kind::Full) {
      out.trains.push_back(tp);
    } else if (s->kind == TrainScope::Kind::Frozen) {
      if (!s->frozen) throw Error("frozen scope without a run for train " + std::to_string(tp.train));
      out.trains.push_back(freeze_train(tp, *s->frozen));
    } else {
      out.trains.push_back(restrict_train(tp, s->edges, s->pinned, full.max_window));
    }
  }
  return out;
}

/// Structural problems of a candidate solution against a scoped problem:
/// missing trains, runs leaving the DAG or their windows, too-fast moves and
/// revisited cells. Resource conflicts are checked separately.
inline std::vector<std::string> solution_violations(const ScopedProblem& prob, const std::vector<TrainRun>& runs) {
  std::vector<std::string> out;
  if (runs.size() != prob.trains.size()) out.push_back("run count differs from train count");
  for (const auto& tp : prob.trains) {
    auto it = std::find_if(runs.begin(), runs.end(), [&](const TrainRun& r) { return r.train == tp.train; });
    const std::string tag = "train " + std::to_string(tp.train) + ": ";
    if (it == runs.end()) {
      out.push_back(tag + "missing");
      continue;
    }
    const auto& w = it->waypoints;
    if (w.empty()) {
      out.push_back(tag + "empty");
      continue;
    }
    if (w.front().waypoint != tp.dag.nodes[static_cast<std::size_t>(tp.dag.source)]) out.push_back(tag + "bad source");
    std::set<Cell> cells;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto v = tp.dag.find(w[i].waypoint);
      if (!v) {
        out.push_back(tag + "node outside route graph");
        continue;
      }
      const auto vi = static_cast<std::size_t>(*v);
      if (w[i].time < tp.earliest[vi] || w[i].time > tp.latest[vi]) out.push_back(tag + "time outside window");
      if (!cells.insert(w[i].waypoint.cell).second) out.push_back(tag + "revisits a cell");
      if (i + 1 < w.size()) {
        if (!tp.dag.has_edge(w[i].waypoint, w[i + 1].waypoint)) out.push_back(tag + "edge outside route graph");
        if (w[i + 1].time - w[i].time < tp.step_duration()) out.push_back(tag + "moves too fast");
      } else if (!tp.dag.is_sink(*v)) {
        out.push_back(tag + "does not end at a sink");
      }
    }
    if (it->step_duration != tp.step_duration()) out.push_back(tag + "wrong step duration");
  }
  return out;
}

}  // namespace corescope
