#include <gtest/gtest.h>

#include "corescope/scopers.hpp"
#include "corescope/solver.hpp"
#include "fixtures.hpp"

using namespace corescope;
using fixtures::H;

namespace {

Schedule one_train_schedule(const Infrastructure& inf) { return generate_schedule(inf, 1); }

Infrastructure east_only() {
  auto inf = fixtures::passing_loop();
  inf.trains.resize(1);
  return inf;
}

Time arrival_earliest(const TrainProblem& tp) {
  Time best = kTimeInfinity;
  for (int s : tp.dag.sinks) best = std::min(best, tp.earliest[static_cast<std::size_t>(s)]);
  return best;
}

struct Generated {
  Infrastructure infra;
  Schedule schedule;
};

const Generated& generated() {
  static const Generated g = [] {
    InfraParams p;
    p.width = p.height = 40;
    p.max_num_cities = 4;
    p.number_of_agents = 8;
    Generated x;
    x.infra = generate_infrastructure(p, 21);
    x.schedule = generate_schedule(x.infra, 4);
    return x;
  }();
  return g;
}

}  // namespace

TEST(Malfunction, StartsEarliestStepsAfterDeparture) {
  const auto& g = generated();
  const auto m = malfunction_for(g.schedule, 3, 30, 50);
  EXPECT_EQ(m.train, 3);
  EXPECT_EQ(m.duration, 50);
  EXPECT_EQ(m.time, g.schedule.run(3).departure() + 30);
  EXPECT_THROW(malfunction_for(g.schedule, 3, 30, 0), Error);
  EXPECT_THROW(malfunction_for(g.schedule, 3, -1, 5), Error);
}

TEST(Malfunction, DrawIsSeededAndSingleTrainIsAlwaysDrawn) {
  const auto& g = generated();
  EXPECT_EQ(draw_malfunction(g.schedule, 5, 10, 77), draw_malfunction(g.schedule, 5, 10, 77));
  const auto inf = east_only();
  const auto s = one_train_schedule(inf);
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_EQ(draw_malfunction(s, 1, 3, seed).train, 0);
  EXPECT_THROW(draw_malfunction(s, 10, 3, 0), InapplicableMalfunction);
}

TEST(Cost, Examples) {
  const auto inf = east_only();
  const auto s = one_train_schedule(inf);
  const CostWeights w{30, 1};
  EXPECT_EQ(cost(s.runs, s, w), 0);
  auto late = s.runs;
  for (auto& x : late[0].waypoints) x.time += 50;
  EXPECT_EQ(cost(late, s, w), 50);
  // Loop route: (0,0) (0,1) (1,1) (1,2) (1,3) (0,3) (0,4); four nodes off the line.
  TrainRun loop{0, 1, {}};
  const std::vector<Waypoint> path{{{0, 0}, H::East}, {{0, 1}, H::East}, {{1, 1}, H::South}, {{1, 2}, H::East},
                                   {{1, 3}, H::East}, {{0, 3}, H::North}, {{0, 4}, H::East}};
  for (std::size_t i = 0; i < path.size(); ++i) loop.waypoints.push_back({path[i], static_cast<Time>(i)});
  EXPECT_EQ(route_deviation(loop, s.runs[0]), 4);
  EXPECT_EQ(cost({loop}, s, w), 2 + 4 * 30);
  // One off-path node, arriving on time.
  TrainRun one = s.runs[0];
  one.waypoints[2].waypoint = {{5, 5}, H::East};
  EXPECT_EQ(cost({one}, s, w), 30);
}

TEST(FullProblem, HaltShiftsArrivalByDurationWithoutAlternative) {
  const auto inf = east_only();
  const auto s = one_train_schedule(inf);
  // At t = 1 the train has entered (0,1); it stands there for 5 steps.
  const Malfunction m{0, 1, 5};
  const auto p = build_full_problem(inf, s, m, {}, 1, 20);
  const auto& tp = p.train(0);
  EXPECT_EQ(tp.dag.nodes.size(), 5u);
  EXPECT_EQ(arrival_earliest(tp), s.runs[0].arrival() + 5);
  // The realized prefix is pinned to the schedule.
  EXPECT_TRUE(tp.pinned(*tp.dag.find({{0, 0}, H::East})));
  EXPECT_TRUE(tp.pinned(*tp.dag.find({{0, 1}, H::East})));
  EXPECT_EQ(tp.earliest[static_cast<std::size_t>(*tp.dag.find({{0, 2}, H::East}))], 1 + 1 + 5);
  const auto sol = solve(p);
  ASSERT_TRUE(sol.solution);
  EXPECT_EQ(sol.solution->cost, 5);
}

TEST(FullProblem, MalfunctionBeforeDepartureDelaysDeparture) {
  const auto inf = fixtures::passing_loop();
  const auto s = generate_schedule(inf, 5);
  const auto& waiting = s.runs[0].departure() > 0 ? s.runs[0] : s.runs[1];
  ASSERT_EQ(waiting.departure(), 6);
  const Malfunction m{waiting.train, 2, 6};
  const auto p = build_full_problem(inf, s, m, {}, 2, 20);
  const auto& tp = p.train(waiting.train);
  EXPECT_EQ(tp.earliest[static_cast<std::size_t>(tp.dag.source)], 8);
  // A halt ending before the planned departure changes nothing.
  const auto q = build_full_problem(inf, s, {waiting.train, 2, 3}, {}, 2, 20);
  EXPECT_EQ(q.train(waiting.train).earliest[static_cast<std::size_t>(tp.dag.source)], 6);
}

TEST(FullProblem, VacuousMalfunctionCostsNothing) {
  const auto& g = generated();
  const auto& run = g.schedule.runs[0];
  const Malfunction m{run.train, run.arrival() + 1, 10};
  EXPECT_TRUE(is_vacuous(m, g.schedule));
  const auto p = build_full_problem(g.infra, g.schedule, m, {}, 4, 30);
  const auto sol = solve(p);
  ASSERT_TRUE(sol.solution);
  EXPECT_EQ(sol.solution->cost, 0);
  EXPECT_TRUE(solution_violations(p, g.schedule.runs).empty());
}

TEST(FullProblem, ScheduleFitsEveryWindowOfOtherTrains) {
  const auto& g = generated();
  const auto m = malfunction_for(g.schedule, 1, 5, 10);
  const auto p = build_full_problem(g.infra, g.schedule, m, {}, 4, 30);
  ASSERT_EQ(p.trains.size(), g.schedule.runs.size());
  for (const auto& tp : p.trains) {
    EXPECT_TRUE(is_acyclic(tp.dag));
    for (std::size_t v = 0; v < tp.dag.nodes.size(); ++v) EXPECT_LE(tp.earliest[v], tp.latest[v]);
    if (tp.train == m.train) continue;
    for (const auto& w : tp.scheduled.waypoints) {
      const auto v = tp.dag.find(w.waypoint);
      ASSERT_TRUE(v);
      EXPECT_GE(w.time, tp.earliest[static_cast<std::size_t>(*v)]);
      EXPECT_LE(w.time, tp.latest[static_cast<std::size_t>(*v)]);
    }
  }
}

TEST(ApplyScope, AllFullIsIdentity) {
  const auto& g = generated();
  const auto m = malfunction_for(g.schedule, 1, 5, 10);
  const auto p = build_full_problem(g.infra, g.schedule, m, {}, 4, 30);
  auto q = apply_scope(p, scope_online_unrestricted(g.schedule, m));
  EXPECT_EQ(q, p);
  q = apply_scope(p, ScopeDirective{});
  EXPECT_EQ(q, p);
}

TEST(ApplyScope, FreezingEveryTrainToTheScheduleLeavesOnlyIt) {
  const auto& g = generated();
  const auto& run = g.schedule.runs[0];
  const Malfunction m{run.train, run.arrival() + 1, 10};
  const auto p = build_full_problem(g.infra, g.schedule, m, {}, 4, 30);
  ScopeDirective d;
  d.kind = "frozen";
  for (const auto& r : g.schedule.runs) d.trains[r.train] = TrainScope{TrainScope::Kind::Frozen, r, {}, {}};
  const auto q = apply_scope(p, d);
  for (const auto& tp : q.trains) EXPECT_TRUE(tp.fully_pinned());
  const auto sol = solve(q);
  ASSERT_TRUE(sol.solution);
  EXPECT_EQ(sol.solution->runs, g.schedule.runs);
  EXPECT_EQ(sol.stats.branchings, 0u);
}

TEST(ApplyScope, FreezeOutsideWindowIsRejected) {
  const auto inf = east_only();
  const auto s = one_train_schedule(inf);
  const auto p = build_full_problem(inf, s, {0, 1, 5}, {}, 1, 20);
  ScopeDirective d;
  // The schedule itself ignores the halt, so it no longer fits.
  d.trains[0] = TrainScope{TrainScope::Kind::Frozen, s.runs[0], {}, {}};
  EXPECT_THROW(apply_scope(p, d), InfeasibleFreeze);
  TrainRun off = s.runs[0];
  off.waypoints[2].waypoint = {{1, 2}, H::East};
  d.trains[0] = TrainScope{TrainScope::Kind::Frozen, off, {}, {}};
  EXPECT_THROW(apply_scope(p, d), InfeasibleFreeze);
}

TEST(ApplyScope, RestrictKeepsOnlyAllowedEdges) {
  const auto inf = east_only();
  const auto s = one_train_schedule(inf);
  const auto p = build_full_problem(inf, s, {0, 0, 3}, {}, 2, 20);
  ASSERT_EQ(enumerate_dag_paths(p.train(0).dag).size(), 2u);
  ScopeDirective d;
  TrainScope r;
  r.kind = TrainScope::Kind::Restricted;
  r.edges = scope_detail::edges_of(s.runs[0]);
  d.trains[0] = r;
  const auto q = apply_scope(p, d);
  EXPECT_EQ(q.train(0).dag.nodes.size(), 5u);
  EXPECT_EQ(enumerate_dag_paths(q.train(0).dag).size(), 1u);
}
