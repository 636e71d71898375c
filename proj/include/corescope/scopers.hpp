#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "corescope/infrastructure.hpp"
#include "corescope/resched.hpp"
#include "corescope/scheduling.hpp"
#include "corescope/solver.hpp"

namespace corescope {

/// Trains whose run in `runs` differs from the schedule in any waypoint or time.
inline std::vector<TrainId> changed_trains(const Schedule& schedule, const std::vector<TrainRun>& runs) {
  std::vector<TrainId> out;
  for (const auto& r : runs)
    if (!(r == schedule.run(r.train))) out.push_back(r.train);
  std::sort(out.begin(), out.end());
  return out;
}

namespace scope_detail {

inline TrainScope frozen(const TrainRun& run) {
  TrainScope s;
  s.kind = TrainScope::Kind::Frozen;
  s.frozen = run;
  return s;
}

inline std::set<std::pair<Waypoint, Waypoint>> edges_of(const TrainRun& run) {
  std::set<std::pair<Waypoint, Waypoint>> out;
  for (std::size_t i = 0; i + 1 < run.waypoints.size(); ++i)
    out.insert({run.waypoints[i].waypoint, run.waypoints[i + 1].waypoint});
  return out;
}

}  // namespace scope_detail

inline ScopeDirective scope_online_unrestricted(const Schedule& schedule, const Malfunction& m) {
  (void)m;
  ScopeDirective d;
  d.kind = "online_unrestricted";
  for (const auto& r : schedule.runs) d.trains[r.train] = TrainScope{};
  return d;
}

/// Every train frozen to the unrestricted solution.
inline ScopeDirective scope_upper_bound(const Solution& unrestricted) {
  ScopeDirective d;
  d.kind = "upper_bound";
  d.uses_solution = true;
  for (const auto& r : unrestricted.runs) d.trains[r.train] = scope_detail::frozen(r);
  return d;
}

/// Changed trains may use the edges of their scheduled and re-scheduled
/// paths, with every (waypoint, time) the two runs share pinned; unchanged
/// trains are frozen.
inline ScopeDirective scope_max_speedup(const Schedule& schedule, const Solution& unrestricted) {
  ScopeDirective d;
  d.kind = "max_speedup";
  d.uses_solution = true;
  for (const auto& r : unrestricted.runs) {
    const TrainRun& s0 = schedule.run(r.train);
    if (r == s0) {
      d.trains[r.train] = scope_detail::frozen(r);
      continue;
    }
    TrainScope s;
    s.kind = TrainScope::Kind::Restricted;
    s.edges = scope_detail::edges_of(s0);
    for (const auto& e : scope_detail::edges_of(r)) s.edges.insert(e);
    std::set<TimedWaypoint> in_s0(s0.waypoints.begin(), s0.waypoints.end());
    for (const auto& w : r.waypoints)
      if (in_s0.count(w)) s.pinned.push_back(w);
    d.trains[r.train] = std::move(s);
  }
  return d;
}

/// Changed trains fully flexible, unchanged trains frozen to the schedule.
inline ScopeDirective scope_baseline(const Schedule& schedule, const Solution& unrestricted) {
  ScopeDirective d;
  d.kind = "baseline";
  d.uses_solution = true;
  const auto changed = changed_trains(schedule, unrestricted.runs);
  for (const auto& r : schedule.runs)
    d.trains[r.train] = std::binary_search(changed.begin(), changed.end(), r.train) ? TrainScope{}
                                                                                      : scope_detail::frozen(r);
  return d;
}

/// Delay estimates per train and position along its scheduled run, from
/// propagating the malfunction through shared cells. An occupation released
/// late by `delay` pushes every later-scheduled occupation of the same cell
/// whose entry it reaches; the pushed train is delayed by the overshoot from
/// that position on. Iterated to a fixpoint.
inline std::map<TrainId, std::vector<Time>> transmission_delays(const Schedule& schedule, const Malfunction& m) {
  std::map<TrainId, std::vector<Occupation>> occ;
  std::map<Cell, std::vector<std::pair<TrainId, std::size_t>>> by_cell;
  std::map<TrainId, std::vector<Time>> delay;
  for (const auto& r : schedule.runs) {
    auto o = occupations(r);
    for (std::size_t i = 0; i < o.size(); ++i) by_cell[o[i].cell].push_back({r.train, i});
    delay[r.train].assign(o.size(), 0);
    occ[r.train] = std::move(o);
  }
  const TrainRun& mr = schedule.run(m.train);
  auto& md = delay[m.train];
  if (m.time < mr.departure()) {
    std::fill(md.begin(), md.end(), std::max<Time>(0, m.time + m.duration - mr.departure()));
  } else {
    const auto& o = occ[m.train];
    for (std::size_t i = 0; i < o.size(); ++i)
      if (o[i].to >= m.time) md[i] = m.duration;
  }
  std::vector<TrainId> work{m.train};
  while (!work.empty()) {
    const TrainId a = work.back();
    work.pop_back();
    const auto& oa = occ[a];
    for (std::size_t i = 0; i < oa.size(); ++i) {
      const Time da = delay[a][i];
      if (da <= 0) continue;
      const Time release = oa[i].to + da;
      for (const auto& [b, j] : by_cell[oa[i].cell]) {
        if (b == a) continue;
        const Occupation& ob = occ[b][j];
        if (ob.from < oa[i].from || release < ob.from) continue;
        const Time over = release - ob.from + 1;
        auto& db = delay[b];
        bool raised = false;
        for (std::size_t k = j; k < db.size(); ++k) {
          if (db[k] < over) {
            db[k] = over;
            raised = true;
          }
        }
        if (raised) work.push_back(b);
      }
    }
  }
  return delay;
}

/// Trains predicted to be affected by the malfunction; always contains the
/// malfunction train.
inline std::vector<TrainId> predicted_affected(const Schedule& schedule, const Malfunction& m) {
  std::vector<TrainId> out;
  for (const auto& [id, d] : transmission_delays(schedule, m))
    if (id == m.train || std::any_of(d.begin(), d.end(), [](Time x) { return x > 0; })) out.push_back(id);
  return out;
}

struct HeuristicOptions {
  /// Predicted trains keep their scheduled route and only move in time.
  bool route_restricted = false;
};

inline ScopeDirective scope_heuristic(const Schedule& schedule, const Malfunction& m, const Infrastructure& infra,
                                      const HeuristicOptions& opt = {}) {
  ScopeDirective d;
  d.kind = "heuristic";
  const auto affected = predicted_affected(schedule, m);
  for (const auto& r : schedule.runs) {
    infra.train(r.train);
    if (!std::binary_search(affected.begin(), affected.end(), r.train)) {
      d.trains[r.train] = scope_detail::frozen(r);
    } else if (opt.route_restricted) {
      TrainScope s;
      s.kind = TrainScope::Kind::Restricted;
      s.edges = scope_detail::edges_of(r);
      d.trains[r.train] = std::move(s);
    } else {
      d.trains[r.train] = TrainScope{};
    }
  }
  return d;
}

/// n trains drawn uniformly, the malfunction train always among them; the
/// rest frozen to the schedule.
inline ScopeDirective scope_random(const Schedule& schedule, const Malfunction& m, std::size_t n,
                                   std::uint64_t seed) {
  if (n > schedule.runs.size()) throw Error("random scope size exceeds the number of trains");
  std::vector<TrainId> others;
  for (const auto& r : schedule.runs)
    if (r.train != m.train) others.push_back(r.train);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < others.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
    std::swap(others[i], others[pick(rng)]);
  }
  std::set<TrainId> chosen{m.train};
  for (std::size_t i = 0; chosen.size() < std::max<std::size_t>(n, 1) && i < others.size(); ++i) chosen.insert(others[i]);
  ScopeDirective d;
  d.kind = "random";
  for (const auto& r : schedule.runs) d.trains[r.train] = chosen.count(r.train) ? TrainScope{} : scope_detail::frozen(r);
  return d;
}

}  // namespace corescope
