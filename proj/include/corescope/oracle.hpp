#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "corescope/resched.hpp"
#include "corescope/scheduling.hpp"
#include "corescope/solver.hpp"

namespace corescope {

struct OracleLimits {
  /// Cap on the product over trains of (route count x (widest window + 1)).
  double space_cap = 1e7;
  /// Cap on the timed runs enumerated for a single train.
  std::size_t timeline_cap = 20'000;
  /// Cap on pairwise compatibility checks during the search.
  std::uint64_t check_cap = 50'000'000;
};

namespace oracle_detail {

struct Timeline {
  Cost cost = 0;
  TrainRun run;
  std::vector<Occupation> occ;  // sorted by cell
  std::array<std::uint64_t, 2> cell_bloom{};
  Time first = 0, last = 0;
};

inline void index_timeline(Timeline& tl) {
  std::sort(tl.occ.begin(), tl.occ.end(), [](const Occupation& a, const Occupation& b) { return a.cell < b.cell; });
  tl.first = tl.occ.front().from;
  tl.last = tl.occ.front().to;
  for (const auto& o : tl.occ) {
    const auto h = std::hash<Cell>{}(o.cell) % 128;
    tl.cell_bloom[h / 64] |= std::uint64_t{1} << (h % 64);
    tl.first = std::min(tl.first, o.from);
    tl.last = std::max(tl.last, o.to);
  }
}

inline bool compatible(const Timeline& x, const Timeline& y) {
  if (x.last < y.first || y.last < x.first) return true;
  if ((x.cell_bloom[0] & y.cell_bloom[0]) == 0 && (x.cell_bloom[1] & y.cell_bloom[1]) == 0) return true;
  std::size_t i = 0, j = 0;
  while (i < x.occ.size() && j < y.occ.size()) {
    const auto& a = x.occ[i];
    const auto& b = y.occ[j];
    if (a.cell < b.cell) ++i;
    else if (b.cell < a.cell) ++j;
    else {
      if (a.from <= b.to && b.from <= a.to) return false;
      ++i;
      ++j;
    }
  }
  return true;
}

}  // namespace oracle_detail

/// Exhaustive search over every route and every entry-time assignment inside
/// the windows. Per-train candidates are visited in cost order and a branch is
/// cut once its cost plus the cheapest remaining candidates cannot beat the
/// best complete assignment, which keeps the result a global optimum.
inline Solution brute_force_oracle(const ScopedProblem& problem, const OracleLimits& limits = {}) {
  using oracle_detail::Timeline;
  const std::size_t m = problem.trains.size();
  std::vector<std::vector<std::vector<int>>> paths(m);
  double space = 1;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& tp = problem.trains[i];
    paths[i] = enumerate_dag_paths(tp.dag);
    Time width = 0;
    for (std::size_t v = 0; v < tp.dag.nodes.size(); ++v) width = std::max(width, tp.latest[v] - tp.earliest[v]);
    space *= static_cast<double>(paths[i].size()) * static_cast<double>(width + 1);
  }
  if (space > limits.space_cap) throw TooLarge("oracle search space estimate exceeds cap");

  std::vector<std::vector<Timeline>> cands(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& tp = problem.trains[i];
    const int n = tp.step_duration();
    for (const auto& path : paths[i]) {
      std::vector<Time> times(path.size());
      auto rec = [&](auto&& self, std::size_t pos, Time lo) -> void {
        const auto v = static_cast<std::size_t>(path[pos]);
        for (Time t = std::max(lo, tp.earliest[v]); t <= tp.latest[v]; ++t) {
          times[pos] = t;
          if (pos + 1 < path.size()) {
            self(self, pos + 1, t + n);
            continue;
          }
          if (cands[i].size() >= limits.timeline_cap) throw TooLarge("oracle timeline cap exceeded");
          Timeline tl;
          tl.run = TrainRun{tp.train, n, {}};
          for (std::size_t k = 0; k < path.size(); ++k)
            tl.run.waypoints.push_back({tp.dag.nodes[static_cast<std::size_t>(path[k])], times[k]});
          tl.cost = train_cost(tl.run, tp.scheduled, problem.weights);
          tl.occ = occupations(tl.run);
          oracle_detail::index_timeline(tl);
          cands[i].push_back(std::move(tl));
        }
      };
      rec(rec, 0, std::numeric_limits<Time>::min() / 2);
    }
    if (cands[i].empty()) throw Infeasible("train " + std::to_string(tp.train) + " has no run inside its windows");
    std::stable_sort(cands[i].begin(), cands[i].end(),
                     [](const Timeline& a, const Timeline& b) { return a.cost < b.cost; });
  }

  // Depth-first over trains in cost order; after each pick the remaining
  // trains keep only candidates compatible with it.
  std::optional<Cost> best;
  std::vector<std::size_t> pick(m), best_pick;
  std::vector<std::vector<std::size_t>> all(m);
  for (std::size_t i = 0; i < m; ++i) {
    all[i].resize(cands[i].size());
    for (std::size_t c = 0; c < cands[i].size(); ++c) all[i][c] = c;
  }
  std::uint64_t checks = 0;
  auto dfs = [&](auto&& self, std::size_t i, Cost partial, const std::vector<std::vector<std::size_t>>& live) -> void {
    if (i == m) {
      if (!best || partial < *best) {
        best = partial;
        best_pick = pick;
      }
      return;
    }
    Cost rest = 0;
    for (std::size_t j = i + 1; j < m; ++j) rest += cands[j][live[j].front()].cost;
    for (std::size_t c : live[i]) {
      const auto& tl = cands[i][c];
      if (best && partial + tl.cost + rest >= *best) break;
      std::vector<std::vector<std::size_t>> next(m);
      bool ok = true;
      for (std::size_t j = i + 1; j < m && ok; ++j) {
        checks += live[j].size();
        if (checks > limits.check_cap) throw TooLarge("oracle check cap exceeded");
        for (std::size_t d : live[j])
          if (oracle_detail::compatible(tl, cands[j][d])) next[j].push_back(d);
        ok = !next[j].empty();
      }
      if (!ok) continue;
      pick[i] = c;
      self(self, i + 1, partial + tl.cost, next);
    }
  };
  dfs(dfs, 0, 0, all);
  if (!best) throw Infeasible("no conflict-free assignment inside the windows");
  Solution s;
  for (std::size_t i = 0; i < m; ++i) s.runs.push_back(cands[i][best_pick[i]].run);
  s.cost = *best;
  return s;
}

}  // namespace corescope
