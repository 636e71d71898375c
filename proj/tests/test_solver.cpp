#include <gtest/gtest.h>

#include <random>

#include "corescope/oracle.hpp"
#include "corescope/solver.hpp"
#include "fixtures.hpp"

using namespace corescope;
using fixtures::H;

namespace {

void expect_valid(const ScopedProblem& p, const Schedule& s, const Solution& sol) {
  EXPECT_TRUE(solution_violations(p, sol.runs).empty());
  EXPECT_TRUE(find_conflicts(sol.runs).empty());
  EXPECT_EQ(cost(sol.runs, s, p.weights), sol.cost);
}

}  // namespace

TEST(Solver, AgreesWithExhaustiveSearchOnSmallInstances) {
  int compared = 0, with_cost = 0;
  for (std::uint64_t seed = 0; compared < 100 && seed < 1000; ++seed) {
    std::mt19937_64 r(seed);
    InfraParams p;
    p.width = p.height = 10;
    p.max_num_cities = 2;
    p.number_of_agents = 2 + static_cast<int>(r() % 2);
    p.city_length = 1 + static_cast<int>(r() % 2);
    p.max_rail_in_city = 1 + static_cast<int>(r() % 2);
    Infrastructure inf;
    try {
      inf = generate_infrastructure(p, seed);
    } catch (const GenerationFailed&) {
      continue;
    }
    const auto s = generate_schedule(inf, seed);
    Malfunction m;
    try {
      m = draw_malfunction(s, 2, 2 + static_cast<Time>(r() % 5), seed);
    } catch (const InapplicableMalfunction&) {
      continue;
    }
    const Time window = 1 + static_cast<Time>(r() % 5);
    const auto fp = build_full_problem(inf, s, m, {}, 4, window);
    std::optional<Cost> want;
    try {
      want = brute_force_oracle(fp).cost;
    } catch (const Infeasible&) {
    } catch (const TooLarge&) {
      continue;
    }
    const auto got = solve(fp, {10, 100'000});
    ++compared;
    if (!want) {
      EXPECT_EQ(got.status, SolveStatus::Infeasible) << "seed " << seed;
      continue;
    }
    ASSERT_TRUE(got.solution) << "seed " << seed;
    EXPECT_EQ(got.status, SolveStatus::Optimal);
    EXPECT_EQ(got.solution->cost, *want) << "seed " << seed << " window " << window;
    expect_valid(fp, s, *got.solution);
    with_cost += *want > 0;
  }
  EXPECT_GE(compared, 100);
  // The comparison has to include instances where rescheduling costs something.
  EXPECT_GE(with_cost, 10);
}

TEST(Solver, SingleTrainTakesEarliestPath) {
  auto inf = fixtures::passing_loop();
  inf.trains.resize(1);
  const auto s = generate_schedule(inf, 1);
  const auto p = build_full_problem(inf, s, {0, 2, 4}, {}, 2, 20);
  const auto r = solve(p);
  ASSERT_TRUE(r.solution);
  EXPECT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_TRUE(r.stats.proven);
  // The halt cannot be avoided and a detour would only add more.
  EXPECT_EQ(r.solution->cost, 4);
  EXPECT_EQ(r.solution->runs[0].waypoints.size(), 5u);
  expect_valid(p, s, *r.solution);
}

TEST(Solver, LoopLetsTheDelayedTrainBePassed) {
  const auto inf = fixtures::passing_loop();
  const auto s = generate_schedule(inf, 5);
  const auto p = build_full_problem(inf, s, {s.runs[0].departure() == 0 ? 0 : 1, 1, 3}, {}, 2, 6);
  const auto r = solve(p);
  ASSERT_TRUE(r.solution);
  expect_valid(p, s, *r.solution);
  const auto oracle = brute_force_oracle(p);
  EXPECT_EQ(r.solution->cost, oracle.cost);
}

TEST(Solver, FullyFrozenProblemNeedsNoBranching) {
  const auto inf = fixtures::passing_loop();
  const auto s = generate_schedule(inf, 5);
  const auto& first = s.runs[0].departure() == 0 ? s.runs[0] : s.runs[1];
  const auto p = build_full_problem(inf, s, {first.train, first.arrival() + 1, 5}, {}, 2, 10);
  ScopeDirective d;
  for (const auto& run : s.runs) d.trains[run.train] = TrainScope{TrainScope::Kind::Frozen, run, {}, {}};
  const auto r = solve(apply_scope(p, d));
  ASSERT_TRUE(r.solution);
  EXPECT_EQ(r.solution->runs, s.runs);
  EXPECT_EQ(r.solution->cost, 0);
  EXPECT_EQ(r.stats.branchings, 0u);
}

TEST(Solver, HeadOnWithoutSlackIsInfeasible) {
  // Both trains are pinned to leave at 0 along the single line towards each other.
  const auto inf = fixtures::passing_loop();
  const auto s = generate_schedule(inf, 5);
  auto p = build_full_problem(inf, s, {0, 100, 1}, {}, 1, 0);
  for (auto& tp : p.trains) {
    ASSERT_EQ(tp.dag.nodes.size(), 5u);
    for (std::size_t v = 0; v < tp.dag.nodes.size(); ++v) {
      const auto c = tp.dag.nodes[v].cell.col;
      tp.earliest[v] = tp.latest[v] = tp.train == 0 ? c : 4 - c;
    }
  }
  const auto r = solve(p);
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
  EXPECT_FALSE(r.solution);
  EXPECT_THROW(brute_force_oracle(p), Infeasible);
}

TEST(Solver, BranchingBudgetIsReported) {
  InfraParams ip;
  ip.width = ip.height = 40;
  ip.max_num_cities = 4;
  ip.number_of_agents = 12;
  const auto inf = generate_infrastructure(ip, 3);
  const auto s = generate_schedule(inf, 3);
  const auto p = build_full_problem(inf, s, malfunction_for(s, 0, 2, 30), {}, 4, 60);
  const auto full = solve(p);
  ASSERT_TRUE(full.solution);
  expect_valid(p, s, *full.solution);
  // Incumbent costs only ever go down.
  for (std::size_t i = 1; i < full.stats.trace.size(); ++i)
    EXPECT_LE(full.stats.trace[i].second, full.stats.trace[i - 1].second);
  if (full.stats.branchings > 1) {
    const auto cut = solve(p, {200, 1});
    EXPECT_NE(cut.status, SolveStatus::Optimal);
    EXPECT_FALSE(cut.stats.proven);
  }
}
