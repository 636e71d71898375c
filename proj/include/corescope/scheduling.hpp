#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "corescope/infrastructure.hpp"
#include "corescope/routing.hpp"

namespace corescope {

struct TimedWaypoint {
  Waypoint waypoint;
  Time time = 0;  // entry time
  auto operator<=>(const TimedWaypoint&) const = default;
};

/// One train's timed path. Waypoint i is held from its entry time until the
/// entry time of waypoint i + 1 (inclusive); the last one for step_duration
/// steps, after which the train leaves the grid.
struct TrainRun {
  TrainId train = 0;
  int step_duration = 1;
  std::vector<TimedWaypoint> waypoints;

  Time departure() const { return waypoints.front().time; }
  Time arrival() const { return waypoints.back().time; }
  Path path() const {
    Path p;
    p.reserve(waypoints.size());
    for (const auto& w : waypoints) p.push_back(w.waypoint);
    return p;
  }
  bool operator==(const TrainRun&) const = default;
};

struct Occupation {
  Cell cell;
  TrainId train = 0;
  Time from = 0;
  Time to = 0;  // inclusive
};

inline std::vector<Occupation> occupations(const TrainRun& run) {
  std::vector<Occupation> out;
  out.reserve(run.waypoints.size());
  for (std::size_t i = 0; i < run.waypoints.size(); ++i) {
    const auto& w = run.waypoints[i];
    const Time to = i + 1 < run.waypoints.size() ? run.waypoints[i + 1].time : w.time + run.step_duration;
    out.push_back({w.waypoint.cell, run.train, w.time, to});
  }
  return out;
}

struct Conflict {
  Cell cell;
  TrainId train_a = 0;
  TrainId train_b = 0;
  Time from = 0;
  Time to = 0;
  bool operator==(const Conflict&) const = default;
};

/// Pairwise resource overlaps between runs, ordered by cell then time.
inline std::vector<Conflict> find_conflicts(const std::vector<TrainRun>& runs) {
  std::map<Cell, std::vector<Occupation>> by_cell;
  for (const auto& r : runs)
    for (const auto& o : occupations(r)) by_cell[o.cell].push_back(o);
  std::vector<Conflict> out;
  for (auto& [cell, occ] : by_cell) {
    std::sort(occ.begin(), occ.end(), [](const Occupation& a, const Occupation& b) {
      return std::tie(a.from, a.to, a.train) < std::tie(b.from, b.to, b.train);
    });
    for (std::size_t i = 0; i < occ.size(); ++i) {
      for (std::size_t j = i + 1; j < occ.size() && occ[j].from <= occ[i].to; ++j) {
        if (occ[i].train == occ[j].train) continue;
        const auto& a = occ[i].train < occ[j].train ? occ[i] : occ[j];
        const auto& b = occ[i].train < occ[j].train ? occ[j] : occ[i];
        out.push_back({cell, a.train, b.train, std::max(a.from, b.from), std::min(a.to, b.to)});
      }
    }
  }
  return out;
}

struct Schedule {
  std::string schedule_id = "0";
  std::string infra_id = "0";
  std::uint64_t seed = 0;
  Time horizon = 0;
  std::vector<TrainRun> runs;  // ordered by train id

  const TrainRun& run(TrainId id) const {
    for (const auto& r : runs)
      if (r.train == id) return r;
    throw Error("schedule has no run for train " + std::to_string(id));
  }
  Time total_arrival() const {
    Time s = 0;
    for (const auto& r : runs) s += r.arrival();
    return s;
  }
  bool operator==(const Schedule&) const = default;
};

/// Structural problems of a run against the track graph: wrong origin or
/// target, illegal moves, times not advancing by at least the step duration.
/// With exact = true any waiting after departure is reported too.
inline std::vector<std::string> run_violations(const TrainRun& run, const TrainSpec& spec,
                                               const TopologyGraph& graph, bool exact) {
  std::vector<std::string> out;
  const std::string tag = "train " + std::to_string(run.train) + ": ";
  if (run.waypoints.empty()) return {tag + "empty run"};
  if (run.waypoints.front().waypoint != spec.origin) out.push_back(tag + "does not start at origin");
  if (run.waypoints.back().waypoint.cell != spec.target) out.push_back(tag + "does not end at target");
  if (run.step_duration != spec.speed_den) out.push_back(tag + "wrong step duration");
  if (run.departure() < 0) out.push_back(tag + "negative departure");
  for (std::size_t i = 0; i + 1 < run.waypoints.size(); ++i) {
    const auto& a = run.waypoints[i];
    const auto& b = run.waypoints[i + 1];
    if (!graph.has_edge(a.waypoint, b.waypoint))
      out.push_back(tag + "illegal move at index " + std::to_string(i));
    const Time dt = b.time - a.time;
    if (dt < run.step_duration || (exact && dt != run.step_duration))
      out.push_back(tag + "bad time step at index " + std::to_string(i));
  }
  return out;
}

inline std::vector<Conflict> verify_conflict_free(const Schedule& schedule, const Infrastructure& infra) {
  for (const auto& r : schedule.runs) infra.train(r.train);
  return find_conflicts(schedule.runs);
}

struct ScheduleParams {
  /// 0 derives the horizon as slack times the longest shortest run; the
  /// slack doubles while no schedule fits, up to horizon_cap.
  Time horizon = 0;
  Time horizon_cap = 100'000;
  int horizon_slack = 2;
  int restarts = 16;
  /// Route candidates per train during scheduling.
  int paths_per_train = 1;
};

namespace sched_detail {

/// Per-cell closed intervals already reserved.
class ReservationTable {
 public:
  /// Smallest start >= lo where the whole run fits; kTimeInfinity if beyond limit.
  Time earliest_start(const Path& path, int n, Time lo, Time limit) const {
    Time dep = lo;
    while (dep <= limit) {
      Time next = dep;
      for (std::size_t i = 0; i < path.size() && next == dep; ++i) {
        const Time a = dep + static_cast<Time>(i) * n;
        const Time b = a + n;
        auto it = cells_.find(path[i].cell);
        if (it == cells_.end()) continue;
        for (const auto& [x, y] : it->second) {
          if (x <= b && a <= y) {
            next = std::max(next, y + 1 - static_cast<Time>(i) * n);
          }
        }
      }
      if (next == dep) return dep;
      dep = next;
    }
    return kTimeInfinity;
  }
  void reserve(const TrainRun& run) {
    for (const auto& o : occupations(run)) cells_[o.cell].push_back({o.from, o.to});
  }

 private:
  std::map<Cell, std::vector<std::pair<Time, Time>>> cells_;
};

inline TrainRun timed_run(TrainId id, int n, const Path& path, Time dep) {
  TrainRun run{id, n, {}};
  for (std::size_t i = 0; i < path.size(); ++i)
    run.waypoints.push_back({path[i], dep + static_cast<Time>(i) * n});
  return run;
}

}  // namespace sched_detail

/// Prioritized planning: trains in a seeded order each take the earliest
/// conflict-free departure on their best candidate path; the order with the
/// smallest sum of arrival times over all restarts wins. Trains only wait
/// before departure.
inline Schedule generate_schedule(const Infrastructure& infra, std::uint64_t seed,
                                  const ScheduleParams& params = {}, std::string schedule_id = "0") {
  const TopologyGraph graph = to_graph(infra);
  struct Candidate {
    TrainId id;
    int n;
    std::vector<Path> paths;
  };
  std::vector<Candidate> cands;
  Time longest = 0;
  for (const auto& t : infra.trains) {
    auto paths = k_shortest_paths(graph, t.origin, waypoints_at(graph, t.target), params.paths_per_train);
    longest = std::max(longest, static_cast<Time>(paths.front().size() - 1) * t.speed_den);
    cands.push_back({t.id, t.speed_den, std::move(paths)});
  }
  const std::size_t m = cands.size();
  std::vector<std::vector<std::size_t>> orders;
  {
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double fact = 1;
    for (std::size_t i = 2; i <= m; ++i) fact *= static_cast<double>(i);
    if (fact <= params.restarts) {
      do orders.push_back(perm);
      while (std::next_permutation(perm.begin(), perm.end()));
    } else {
      for (int r = 0; r < params.restarts; ++r) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(r)};
        std::mt19937_64 rng(seq);
        auto p = perm;
        std::shuffle(p.begin(), p.end(), rng);
        orders.push_back(std::move(p));
      }
    }
  }

  auto plan = [&](Time horizon) {
    std::optional<Schedule> best;
    for (const auto& order : orders) {
      sched_detail::ReservationTable table;
      std::vector<TrainRun> runs(m);
      bool ok = true;
      for (std::size_t idx : order) {
        const auto& c = cands[idx];
        std::optional<TrainRun> chosen;
        for (const auto& path : c.paths) {
          const Time len = static_cast<Time>(path.size() - 1) * c.n;
          const Time dep = table.earliest_start(path, c.n, 0, horizon - len);
          if (dep == kTimeInfinity) continue;
          if (!chosen || dep + len < chosen->arrival()) chosen = sched_detail::timed_run(c.id, c.n, path, dep);
        }
        if (!chosen) {
          ok = false;
          break;
        }
        table.reserve(*chosen);
        runs[idx] = std::move(*chosen);
      }
      if (!ok) continue;
      Schedule s{schedule_id, infra.infra_id, seed, horizon, std::move(runs)};
      if (!best || s.total_arrival() < best->total_arrival()) best = std::move(s);
    }
    return best;
  };

  std::optional<Schedule> best;
  Time horizon = params.horizon;
  if (horizon > 0) {
    best = plan(horizon);
  } else {
    for (Time slack = std::max(params.horizon_slack, 1); !best; slack *= 2) {
      horizon = std::min<Time>(params.horizon_cap, slack * std::max<Time>(longest, 1));
      best = plan(horizon);
      if (horizon == params.horizon_cap) break;
    }
  }
  if (!best) {
    throw Unschedulable("no conflict-free schedule within horizon " + std::to_string(horizon) + " after " +
                        std::to_string(orders.size()) + " orders");
  }
  std::sort(best->runs.begin(), best->runs.end(),
            [](const TrainRun& a, const TrainRun& b) { return a.train < b.train; });
  return *best;
}

}  // namespace corescope
