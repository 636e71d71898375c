#include <gtest/gtest.h>

#include <set>

#include "corescope/infrastructure.hpp"
#include "corescope/serialize.hpp"

using namespace corescope;

namespace {

using H = Heading;

std::set<std::pair<H, H>> moves(TransitionMatrix m) {
  std::set<std::pair<H, H>> out;
  for (H in : kHeadings)
    for (H o : kHeadings)
      if (allows(m, in, o)) out.insert({in, o});
  return out;
}

}  // namespace

TEST(Elements, StraightAndItsQuarterTurn) {
  EXPECT_EQ(moves(transitions_of(TrackKind::Straight, 0)), (std::set<std::pair<H, H>>{{H::North, H::North}, {H::South, H::South}}));
  EXPECT_EQ(moves(transitions_of(TrackKind::Straight, 1)), (std::set<std::pair<H, H>>{{H::East, H::East}, {H::West, H::West}}));
}

TEST(Elements, DiamondCrossingPassesStraightBothWays) {
  EXPECT_EQ(moves(transitions_of(TrackKind::DiamondCrossing, 0)),
            (std::set<std::pair<H, H>>{{H::North, H::North}, {H::South, H::South}, {H::East, H::East}, {H::West, H::West}}));
}

TEST(Elements, EveryElementIsReversible) {
  // A train that can pass in one direction can pass back the opposite way.
  for (TrackKind k : kTrackKinds) {
    if (k == TrackKind::DeadEnd) continue;
    for (int r = 0; r < 4; ++r)
      for (bool mir : {false, true}) {
        const auto m = transitions_of(k, r, mir);
        for (auto [in, o] : moves(m)) EXPECT_TRUE(allows(m, turn(o, 2), turn(in, 2))) << kind_name(k);
      }
  }
}

TEST(Elements, ClassifyInvertsTransitions) {
  for (TrackKind k : kTrackKinds)
    for (int r = 0; r < 4; ++r)
      for (bool mir : {false, true}) {
        const auto m = transitions_of(k, r, mir);
        const auto c = classify(m);
        ASSERT_TRUE(c);
        EXPECT_EQ(c->transitions(), m);
      }
  EXPECT_FALSE(classify(transition_bit(H::North, H::East) | transition_bit(H::East, H::East)));
}

TEST(Graph, ThreeCellStraight) {
  TrackGrid g(3, 1);
  for (int c = 0; c < 3; ++c) g.set({0, c}, CellType{TrackKind::Straight, 1});
  const auto graph = to_graph(g);
  EXPECT_EQ(graph.nodes.size(), 6u);
  EXPECT_EQ(graph.edge_count, 4u);
  EXPECT_TRUE(graph.has_edge({{0, 0}, H::East}, {{0, 1}, H::East}));
  EXPECT_TRUE(graph.has_edge({{0, 1}, H::East}, {{0, 2}, H::East}));
  EXPECT_TRUE(graph.has_edge({{0, 2}, H::West}, {{0, 1}, H::West}));
  EXPECT_FALSE(graph.has_edge({{0, 0}, H::East}, {{0, 1}, H::West}));
  // Open ends at both sides are reported by the strict check.
  EXPECT_EQ(path_consistency_violations(g).size(), 2u);
}

TEST(Graph, EmptyGrid) {
  const auto graph = to_graph(TrackGrid(4, 4));
  EXPECT_TRUE(graph.nodes.empty());
  EXPECT_EQ(graph.edge_count, 0u);
}

TEST(Graph, InconsistentNeighbourThrows) {
  TrackGrid g(2, 1);
  g.set({0, 0}, CellType{TrackKind::Straight, 1});
  g.set({0, 1}, CellType{TrackKind::Straight, 0});
  EXPECT_THROW(to_graph(g), InconsistentTransitions);
}

TEST(Generate, FullScaleInstance) {
  InfraParams p;
  p.width = p.height = 100;
  p.max_num_cities = 8;
  p.max_rail_in_city = 2;
  p.max_rail_between_cities = 1;
  p.number_of_agents = 62;
  const auto inf = generate_infrastructure(p, 190);
  EXPECT_LE(inf.cities.size(), 8u);
  EXPECT_GE(inf.cities.size(), 2u);
  EXPECT_EQ(inf.trains.size(), 62u);
  EXPECT_TRUE(path_consistency_violations(inf.grid).empty());
  const auto graph = to_graph(inf);
  for (const auto& t : inf.trains) {
    EXPECT_TRUE(graph.find(t.origin));
    EXPECT_FALSE(waypoints_at(graph, t.target).empty());
  }
}

TEST(Generate, TwoCitiesOneTrain) {
  InfraParams p;
  p.width = p.height = 30;
  p.max_num_cities = 2;
  p.number_of_agents = 1;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto inf = generate_infrastructure(p, seed);
    ASSERT_EQ(inf.trains.size(), 1u);
    const auto& t = inf.trains.front();
    int from = -1, to = -1;
    for (std::size_t c = 0; c < inf.cities.size(); ++c) {
      if (inf.cities[c].contains(t.origin.cell)) from = static_cast<int>(c);
      if (inf.cities[c].contains(t.target)) to = static_cast<int>(c);
    }
    EXPECT_GE(from, 0);
    EXPECT_GE(to, 0);
    EXPECT_NE(from, to);
  }
}

TEST(Generate, SeedDeterminesTheBytes) {
  InfraParams p;
  p.width = p.height = 40;
  const auto a = infrastructure_to_json(generate_infrastructure(p, 42)).dump();
  const auto b = infrastructure_to_json(generate_infrastructure(p, 42)).dump();
  const auto c = infrastructure_to_json(generate_infrastructure(p, 43)).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Generate, SpeedsFollowSpeedData) {
  InfraParams p;
  p.width = p.height = 60;
  p.max_num_cities = 6;
  p.number_of_agents = 40;
  p.speed_data = {0, 1, 0, 0};
  for (const auto& t : generate_infrastructure(p, 5).trains) EXPECT_EQ(t.speed_den, 2);
}

TEST(Generate, TooSmallGridFails) {
  InfraParams p;
  p.width = p.height = 6;
  p.max_num_cities = 5;
  p.max_attempts = 3;
  EXPECT_THROW(generate_infrastructure(p, 1), GenerationFailed);
}
