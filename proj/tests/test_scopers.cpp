#include <gtest/gtest.h>

#include "corescope/metrics.hpp"
#include "corescope/scopers.hpp"
#include "corescope/solver.hpp"
#include "fixtures.hpp"

using namespace corescope;
using fixtures::H;

namespace {

/// Train runs east along row `row` over columns [from, to], leaving at `dep`.
TrainRun east(TrainId id, int row, int from, int to, Time dep) {
  TrainRun r{id, 1, {}};
  for (int c = from; c <= to; ++c) r.waypoints.push_back({{{row, c}, H::East}, dep + (c - from)});
  return r;
}

/// 0 blocks 1 at (0,4); 1 blocks 2 at (0,6); 3 runs elsewhere.
Schedule chain() {
  Schedule s;
  s.runs = {east(0, 0, 0, 4, 0), east(1, 0, 4, 6, 6), east(2, 0, 6, 8, 12), east(3, 5, 0, 4, 0)};
  return s;
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
    p.number_of_agents = 10;
    Generated x;
    x.infra = generate_infrastructure(p, 21);
    x.schedule = generate_schedule(x.infra, 4);
    return x;
  }();
  return g;
}

bool is_frozen(const ScopeDirective& d, TrainId id) { return d.trains.at(id).kind == TrainScope::Kind::Frozen; }

}  // namespace

TEST(Heuristic, DelayTravelsAlongTheChain) {
  const auto s = chain();
  // Train 0 stands for 10 steps from t = 1: it releases (0,4) at 15 instead of 5.
  const Malfunction m{0, 1, 10};
  const auto d = transmission_delays(s, m);
  EXPECT_EQ(d.at(0).back(), 10);
  // Train 1 wanted (0,4) at 6: pushed to 16.
  EXPECT_EQ(d.at(1).front(), 10);
  // Train 1 then releases (0,6) at 9 + 10 = 19, past train 2's entry at 12.
  EXPECT_EQ(d.at(2).front(), 8);
  EXPECT_EQ(d.at(3), std::vector<Time>(5, 0));
  EXPECT_EQ(predicted_affected(s, m), (std::vector<TrainId>{0, 1, 2}));
}

TEST(Heuristic, ShortHaltStopsEarly) {
  // Released at 5 + 1 = 6, the entry of train 1: one step of delay for 1,
  // which then still releases (0,6) before train 2 arrives.
  const auto s = chain();
  EXPECT_EQ(predicted_affected(s, {0, 1, 1}), (std::vector<TrainId>{0, 1}));
}

TEST(Heuristic, AlwaysContainsTheMalfunctionTrain) {
  const auto s = chain();
  // A halt after arrival delays nobody.
  EXPECT_EQ(predicted_affected(s, {3, 50, 5}), (std::vector<TrainId>{3}));
  const auto& g = generated();
  for (const auto& r : g.schedule.runs) {
    const auto m = malfunction_for(g.schedule, r.train, 1, 20);
    const auto d = scope_heuristic(g.schedule, m, g.infra);
    EXPECT_FALSE(is_frozen(d, r.train));
  }
}

TEST(Random, SizeAndSeed) {
  const auto& g = generated();
  const auto m = malfunction_for(g.schedule, 2, 5, 10);
  const auto n = g.schedule.runs.size();
  const auto all = scope_random(g.schedule, m, n, 1);
  for (const auto& r : g.schedule.runs) EXPECT_FALSE(is_frozen(all, r.train));
  const auto one = scope_random(g.schedule, m, 1, 1);
  for (const auto& r : g.schedule.runs) EXPECT_EQ(is_frozen(one, r.train), r.train != 2);
  EXPECT_EQ(scope_random(g.schedule, m, 4, 9), scope_random(g.schedule, m, 4, 9));
  EXPECT_EQ(scope_random(g.schedule, m, 4, 9).flexible_trains().size(), 4u);
  EXPECT_THROW(scope_random(g.schedule, m, n + 1, 1), Error);
}

TEST(Perfect, ContainTheUnrestrictedSolutionAndShrinkTheSpace) {
  const auto& g = generated();
  int changed_seen = 0;
  for (TrainId t : {0, 3, 6}) {
    const auto m = malfunction_for(g.schedule, t, 3, 25);
    const auto full = build_full_problem(g.infra, g.schedule, m, {}, 4, 60);
    const auto u = solve(full);
    ASSERT_TRUE(u.solution);
    const auto ub = apply_scope(full, scope_upper_bound(*u.solution));
    const auto ms = apply_scope(full, scope_max_speedup(g.schedule, *u.solution));
    const auto bl_d = scope_baseline(g.schedule, *u.solution);
    const auto bl = apply_scope(full, bl_d);
    for (const auto* p : {&ub, &ms, &bl}) EXPECT_TRUE(solution_violations(*p, u.solution->runs).empty());
    const double s_ub = search_space_log10(ub), s_ms = search_space_log10(ms), s_bl = search_space_log10(bl),
                 s_u = search_space_log10(full);
    EXPECT_LE(s_ub, s_ms);
    EXPECT_LE(s_ms, s_bl);
    EXPECT_LE(s_bl, s_u);
    // Only trains the unrestricted solution moved stay flexible.
    const auto changed = changed_trains(g.schedule, u.solution->runs);
    changed_seen += static_cast<int>(changed.size());
    for (const auto& r : g.schedule.runs)
      EXPECT_EQ(is_frozen(bl_d, r.train), !std::binary_search(changed.begin(), changed.end(), r.train));
    const auto r_ub = solve(ub);
    ASSERT_TRUE(r_ub.solution);
    EXPECT_EQ(r_ub.stats.branchings, 0u);
    EXPECT_EQ(r_ub.solution->cost, u.solution->cost);
    for (const auto* p : {&ms, &bl}) {
      const auto r = solve(*p);
      ASSERT_TRUE(r.solution);
      EXPECT_EQ(r.solution->cost, u.solution->cost);
    }
  }
  EXPECT_GT(changed_seen, 0);
}
