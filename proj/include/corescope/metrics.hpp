#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "corescope/resched.hpp"
#include "corescope/scheduling.hpp"
#include "corescope/scopers.hpp"

namespace corescope {

/// Wall-clock timings are taken in microseconds; shorter durations are
/// clamped to this before forming ratios.
inline constexpr double kTimingResolution = 1e-6;

inline double speedup(double t_full, double t_restricted) {
  if (!(t_full >= 0) || !(t_restricted >= 0)) throw InvalidRange("timings must be nonnegative");
  return std::max(t_full, kTimingResolution) / std::max(t_restricted, kTimingResolution);
}

struct CoreProblem {
  std::vector<TrainId> trains;
  /// (train, timed waypoint) pairs present in exactly one of schedule and re-schedule.
  std::set<std::pair<TrainId, TimedWaypoint>> nodes;
};

inline CoreProblem core_problem(const Schedule& schedule, const std::vector<TrainRun>& resolved) {
  CoreProblem out;
  out.trains = changed_trains(schedule, resolved);
  for (TrainId id : out.trains) {
    const auto& s0 = schedule.run(id).waypoints;
    const auto& s = std::find_if(resolved.begin(), resolved.end(), [&](const TrainRun& r) { return r.train == id; })->waypoints;
    const std::set<TimedWaypoint> a(s0.begin(), s0.end()), b(s.begin(), s.end());
    for (const auto& w : a)
      if (!b.count(w)) out.nodes.insert({id, w});
    for (const auto& w : b)
      if (!a.count(w)) out.nodes.insert({id, w});
  }
  return out;
}

struct PredictionQuality {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  double f1 = 1.0;
  /// Both sets empty; f1 is reported as 1.
  bool vacuous = false;
};

inline PredictionQuality prediction_quality(const std::vector<TrainId>& predicted, const std::vector<TrainId>& core) {
  const std::set<TrainId> p(predicted.begin(), predicted.end()), c(core.begin(), core.end());
  PredictionQuality q;
  for (TrainId id : p) (c.count(id) ? q.true_positives : q.false_positives)++;
  for (TrainId id : c)
    if (!p.count(id)) ++q.false_negatives;
  const int denom = 2 * q.true_positives + q.false_positives + q.false_negatives;
  q.vacuous = denom == 0;
  q.f1 = q.vacuous ? 1.0 : 2.0 * q.true_positives / denom;
  return q;
}

struct AdditionalLateness {
  Cost value = 0;
  /// Either cost is not proven optimal for its problem, so the value may be off.
  bool flagged = false;
};

inline AdditionalLateness additional_lateness(Cost scoper_cost, Cost optimal_cost, bool both_proven) {
  return {scoper_cost - optimal_cost, !both_proven};
}

/// log10 of the number of (route, entry-time) choices the solver faces: per
/// train, DAG source-sink paths times (widest window + 1), multiplied over
/// trains.
inline double search_space_log10(const ScopedProblem& p) {
  double total = 0;
  for (const auto& tp : p.trains) {
    const auto order = topological_order(tp.dag);
    if (!order) throw Error("route DAG has a cycle");
    std::vector<double> paths(tp.dag.nodes.size(), 0);
    if (tp.dag.source >= 0) paths[static_cast<std::size_t>(tp.dag.source)] = 1;
    double sinks = 0;
    Time width = 0;
    for (int v : *order) {
      const auto u = static_cast<std::size_t>(v);
      for (int w : tp.dag.successors[u]) paths[static_cast<std::size_t>(w)] += paths[u];
      if (tp.dag.is_sink(v)) sinks += paths[u];
      width = std::max(width, tp.latest[u] - tp.earliest[u]);
    }
    total += std::log10(std::max(sinks, 1.0)) + std::log10(static_cast<double>(width) + 1);
  }
  return total;
}

/// Index of the equidistant bin over [lo, hi] containing t; values outside
/// go to the first or last bin.
inline int difficulty_bin(double t, double lo, double hi, int bins = 10) {
  if (!(hi > lo) || bins <= 0) throw InvalidRange("difficulty range must satisfy lo < hi and bins > 0");
  const double x = (t - lo) / (hi - lo) * bins;
  return std::clamp(static_cast<int>(std::floor(x)), 0, bins - 1);
}

}  // namespace corescope
