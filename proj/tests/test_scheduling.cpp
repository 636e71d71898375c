#include <gtest/gtest.h>

#include "corescope/scheduling.hpp"
#include "corescope/serialize.hpp"
#include "fixtures.hpp"

using namespace corescope;
using fixtures::H;

namespace {

TrainRun line_run(TrainId id, int row, int from_col, int to_col, Time dep) {
  TrainRun r{id, 1, {}};
  const int dir = to_col >= from_col ? 1 : -1;
  for (int c = from_col, i = 0;; c += dir, ++i) {
    r.waypoints.push_back({{{row, c}, dir > 0 ? H::East : H::West}, dep + i});
    if (c == to_col) break;
  }
  return r;
}

}  // namespace

TEST(Schedule, SingleTrainLeavesAtOnceOnShortestPath) {
  auto inf = fixtures::passing_loop();
  inf.trains.resize(1);
  const auto s = generate_schedule(inf, 3);
  ASSERT_EQ(s.runs.size(), 1u);
  EXPECT_EQ(s.runs[0].departure(), 0);
  EXPECT_EQ(s.runs[0].waypoints.size(), 5u);
  EXPECT_EQ(s.runs[0].arrival(), 4);
}

TEST(Schedule, PassingLoopMatchesBruteForceOverDepartures) {
  const auto inf = fixtures::passing_loop();
  const auto s = generate_schedule(inf, 5);
  EXPECT_TRUE(verify_conflict_free(s, inf).empty());
  const auto graph = to_graph(inf);
  for (const auto& r : s.runs) EXPECT_TRUE(run_violations(r, inf.train(r.train), graph, true).empty());

  // Both trains on their shortest path, departures tried exhaustively.
  const auto east = line_run(0, 0, 0, 4, 0);
  const auto west = line_run(1, 0, 4, 0, 0);
  Time best = kTimeInfinity;
  for (Time a = 0; a <= 12; ++a)
    for (Time b = 0; b <= 12; ++b) {
      auto ra = east, rb = west;
      for (auto& w : ra.waypoints) w.time += a;
      for (auto& w : rb.waypoints) w.time += b;
      if (find_conflicts({ra, rb}).empty()) best = std::min(best, ra.arrival() + rb.arrival());
    }
  EXPECT_EQ(best, 4 + 10);
  EXPECT_EQ(s.total_arrival(), best);
  // One train goes at once, the other waits at its origin.
  EXPECT_EQ(std::min(s.runs[0].departure(), s.runs[1].departure()), 0);
  EXPECT_GT(std::max(s.runs[0].departure(), s.runs[1].departure()), 0);
}

TEST(Schedule, LargeGeneratedInstanceIsConflictFree) {
  InfraParams p;
  p.width = p.height = 100;
  p.max_num_cities = 8;
  p.number_of_agents = 62;
  const auto inf = generate_infrastructure(p, 190);
  const auto s = generate_schedule(inf, 814);
  EXPECT_EQ(s.runs.size(), 62u);
  EXPECT_TRUE(verify_conflict_free(s, inf).empty());
  const auto graph = to_graph(inf);
  for (const auto& r : s.runs) {
    EXPECT_TRUE(run_violations(r, inf.train(r.train), graph, true).empty());
    // Every scheduled path is one of the train's route alternatives.
    const auto dag = route_dag_of(graph, inf.train(r.train), p.number_of_shortest_paths_per_train);
    for (std::size_t i = 0; i + 1 < r.waypoints.size(); ++i)
      EXPECT_TRUE(dag.has_edge(r.waypoints[i].waypoint, r.waypoints[i + 1].waypoint));
  }
}

TEST(Schedule, SeedDeterminesTheBytes) {
  InfraParams p;
  p.width = p.height = 40;
  const auto inf = generate_infrastructure(p, 9);
  EXPECT_EQ(schedule_to_json(generate_schedule(inf, 1)).dump(), schedule_to_json(generate_schedule(inf, 1)).dump());
}

TEST(Conflicts, IdenticalRunsClashEverywhere) {
  const auto a = line_run(0, 0, 0, 4, 0);
  auto b = a;
  b.train = 1;
  const auto c = find_conflicts({a, b});
  EXPECT_EQ(c.size(), 5u);
  for (const auto& x : c) {
    EXPECT_EQ(x.train_a, 0);
    EXPECT_EQ(x.train_b, 1);
  }
}

TEST(Conflicts, DisjointRoutesAreClean) {
  EXPECT_TRUE(find_conflicts({line_run(0, 0, 0, 4, 0), line_run(1, 1, 0, 4, 0)}).empty());
}

TEST(Conflicts, OneCrossingCell) {
  // East along row 2 and south along column 2 both reach (2,2) at time 2.
  const auto a = line_run(0, 2, 0, 4, 0);
  TrainRun b{1, 1, {}};
  for (int r = 0; r <= 4; ++r) b.waypoints.push_back({{{r, 2}, H::South}, r});
  const auto c = find_conflicts({a, b});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].cell, (Cell{2, 2}));
  // Both hold (2,2) over [2, 3].
  EXPECT_EQ(c[0].from, 2);
  EXPECT_EQ(c[0].to, 3);
}

TEST(Conflicts, HandOverNeedsAFreeStep) {
  // Resource holds are inclusive: entering a cell at the step another train
  // leaves it is a clash, one step later is not.
  const auto a = line_run(0, 0, 0, 2, 0);  // holds (0,2) over [2, 3]
  EXPECT_EQ(find_conflicts({a, line_run(1, 0, 2, 4, 3)}).size(), 1u);
  EXPECT_TRUE(find_conflicts({a, line_run(1, 0, 2, 4, 4)}).empty());
}

TEST(Verify, ReportsStructuralViolations) {
  const auto inf = fixtures::passing_loop();
  const auto graph = to_graph(inf);
  auto r = line_run(0, 0, 0, 4, 0);
  EXPECT_TRUE(run_violations(r, inf.train(0), graph, true).empty());
  r.waypoints[2].waypoint.cell = {1, 2};
  EXPECT_FALSE(run_violations(r, inf.train(0), graph, false).empty());
  auto slow = line_run(0, 0, 0, 4, 0);
  slow.waypoints[3].time += 1;
  slow.waypoints[4].time += 1;
  EXPECT_TRUE(run_violations(slow, inf.train(0), graph, false).empty());
  EXPECT_FALSE(run_violations(slow, inf.train(0), graph, true).empty());
}
