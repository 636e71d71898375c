#include <gtest/gtest.h>

#include <set>

#include "corescope/pipeline.hpp"

using namespace corescope;

TEST(Range, WorkedExamples) {
  EXPECT_EQ(expand_range({8, 15, 3}), (std::vector<long long>{8, 10, 12}));
  EXPECT_EQ(expand_range({1, 2, 2}), (std::vector<long long>{1, 1}));
  EXPECT_EQ(expand_range({0, 4, 4}), (std::vector<long long>{0, 1, 2, 3}));
  EXPECT_EQ(expand_range({50, 98, 4}), (std::vector<long long>{50, 62, 74, 86}));
  EXPECT_EQ(expand_range(ValueRange::single(7)), (std::vector<long long>{7}));
}

TEST(Range, Errors) {
  EXPECT_THROW(expand_range({0, 5, 0}), InvalidRange);
  EXPECT_THROW(expand_range({5, 0, 2}), InvalidRange);
  // n = 1 never looks at b.
  EXPECT_EQ(expand_range({5, 0, 1}), (std::vector<long long>{5}));
}

TEST(Range, JsonForms) {
  EXPECT_EQ(json(3).get<ValueRange>(), ValueRange::single(3));
  EXPECT_EQ(json::parse("[2, 6]").get<ValueRange>(), (ValueRange{2, 6, 4}));
  EXPECT_EQ(json::parse("[2, 6, 2]").get<ValueRange>(), (ValueRange{2, 6, 2}));
  EXPECT_THROW(json::parse("[1]").get<ValueRange>(), SchemaError);
}

TEST(Agenda, FullScaleHas3264Experiments) {
  const auto ag = expand_agenda(full_agenda());
  // 3 city counts x 4 train counts; 4 schedules each; one malfunction per train.
  EXPECT_EQ(ag.infras.size(), 12u);
  EXPECT_EQ(ag.schedules.size(), 48u);
  EXPECT_EQ(ag.experiments.size(), 3264u);
  std::set<ExperimentId> ids;
  for (const auto& e : ag.experiments) ids.insert(e.id);
  EXPECT_EQ(ids.size(), 3264u);
}

TEST(Agenda, TwoByTwoByThreeGivesTwelveIds) {
  AgendaConfig c = desk_agenda();
  c.infra.max_num_cities = ValueRange::single(4);
  c.infra.number_of_agents = {8, 10, 2};
  c.schedule.schedule_id = {0, 2, 2};
  c.reschedule.malfunction_train_id = {0, 3, 3};
  const auto ag = expand_agenda(c);
  ASSERT_EQ(ag.experiments.size(), 12u);
  std::set<std::string> ids;
  for (const auto& e : ag.experiments) ids.insert(e.id.str());
  EXPECT_EQ(ids.size(), 12u);
  EXPECT_TRUE(ids.count("0_0_0_0"));
  EXPECT_TRUE(ids.count("1_1_2_0"));
  // Malfunction id m stops train m.
  for (const auto& e : ag.experiments) EXPECT_EQ(e.malfunction_train, e.id.malfunction_id);
}

TEST(Agenda, DeskDefault) {
  const auto ag = expand_agenda(desk_agenda());
  EXPECT_EQ(ag.infras.size(), 12u);
  EXPECT_EQ(ag.schedules.size(), 24u);
  // Malfunction ids 0, 4, 8 on 8, 10, 12 or 14 trains: 3 per schedule.
  EXPECT_EQ(ag.experiments.size(), 72u - 6u);
  for (const auto& s : ag.schedules)
    EXPECT_EQ(s.seed, static_cast<std::uint64_t>(desk_agenda().schedule.asp_seed_value + s.schedule_id));
}

TEST(Agenda, MalfunctionIdsBeyondTrainCountAreDropped) {
  AgendaConfig c = desk_agenda();
  c.infra.number_of_agents = ValueRange::single(8);
  c.infra.max_num_cities = ValueRange::single(4);
  c.schedule.schedule_id = ValueRange::single(0);
  c.reschedule.malfunction_train_id = {0, 14, 14};
  EXPECT_EQ(expand_agenda(c).experiments.size(), 8u);
}

TEST(Agenda, DuplicateRangeValuesCollapse) {
  AgendaConfig c = desk_agenda();
  c.infra.max_num_cities = ValueRange::single(4);
  c.infra.number_of_agents = ValueRange::single(8);
  c.schedule.schedule_id = {1, 2, 2};  // [1, 1]
  c.reschedule.malfunction_train_id = ValueRange::single(0);
  const auto ag = expand_agenda(c);
  EXPECT_EQ(ag.schedules.size(), 1u);
  EXPECT_EQ(ag.experiments.size(), 1u);
}

TEST(Agenda, EmptyExpansionThrows) {
  AgendaConfig c = desk_agenda();
  c.infra.number_of_agents = ValueRange::single(2);
  c.reschedule.malfunction_train_id = ValueRange::single(5);
  EXPECT_THROW(expand_agenda(c), EmptyAgenda);
}

TEST(Agenda, ReExpansionIsByteStable) {
  const auto a = agenda_config_to_json(full_agenda()).dump();
  const auto b = agenda_config_to_json(agenda_config_from_json(json::parse(a), desk_agenda())).dump();
  EXPECT_EQ(a, b);
  const auto x = expand_agenda(desk_agenda());
  const auto y = expand_agenda(desk_agenda());
  ASSERT_EQ(x.experiments.size(), y.experiments.size());
  for (std::size_t i = 0; i < x.experiments.size(); ++i) EXPECT_EQ(x.experiments[i].id, y.experiments[i].id);
}

TEST(Agenda, PartialConfigKeepsDefaults) {
  const auto c = agenda_config_from_json(json::parse(R"({"agenda_id": "small", "runs": {"random_seeds": 2}})"));
  EXPECT_EQ(c.agenda_id, "small");
  EXPECT_EQ(c.runs.random_seeds, 2);
  EXPECT_EQ(c.infra, desk_agenda().infra);
  EXPECT_EQ(c.reschedule, desk_agenda().reschedule);
}

TEST(Agenda, ConfigRejectsBadInput) {
  EXPECT_THROW(agenda_config_from_json(json::array()), SchemaError);
  EXPECT_THROW(agenda_config_from_json(json::parse(R"({"runs": {"random_seeds": -1}})")), InvalidRange);
}

namespace {

struct Fixture {
  Infrastructure infra;
  Schedule schedule;
  Malfunction malfunction;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    InfraParams p;
    p.width = p.height = 30;
    p.max_num_cities = 3;
    p.number_of_agents = 5;
    Fixture x;
    x.infra = generate_infrastructure(p, 7);
    x.schedule = generate_schedule(x.infra, 11);
    x.malfunction = malfunction_for(x.schedule, 1, 10, 8);
    return x;
  }();
  return f;
}

}  // namespace

TEST(Serialize, InfrastructureRoundTrip) {
  const auto& f = fixture();
  const json j = infrastructure_to_json(f.infra);
  EXPECT_EQ(j.at("schema"), "infrastructure");
  EXPECT_EQ(j.at("version"), kSchemaVersion);
  EXPECT_EQ(infrastructure_from_json(j), f.infra);
  EXPECT_EQ(infrastructure_from_json(json::parse(j.dump())), f.infra);
}

TEST(Serialize, ScheduleAndMalfunctionRoundTrip) {
  const auto& f = fixture();
  EXPECT_EQ(schedule_from_json(json::parse(schedule_to_json(f.schedule).dump())), f.schedule);
  EXPECT_EQ(malfunction_from_json(json::parse(malfunction_to_json(f.malfunction).dump())), f.malfunction);
}

TEST(Serialize, ProblemAndDirectiveRoundTrip) {
  const auto& f = fixture();
  const auto full = build_full_problem(f.infra, f.schedule, f.malfunction, {}, 4, 20);
  EXPECT_EQ(problem_from_json(json::parse(problem_to_json(full).dump())), full);
  const auto sol = solve(full);
  ASSERT_TRUE(sol.solution);
  for (const auto& d : {scope_upper_bound(*sol.solution), scope_max_speedup(f.schedule, *sol.solution),
                        scope_baseline(f.schedule, *sol.solution)})
    EXPECT_EQ(directive_from_json(json::parse(directive_to_json(d).dump())), d);
}

TEST(Serialize, RejectsWrongSchemaAndVersion) {
  const auto& f = fixture();
  json j = schedule_to_json(f.schedule);
  EXPECT_THROW(infrastructure_from_json(j), SchemaError);
  j["version"] = kSchemaVersion + 1;
  EXPECT_THROW(schedule_from_json(j), SchemaError);
  json bad = malfunction_to_json(f.malfunction);
  bad.erase("duration");
  EXPECT_ANY_THROW(malfunction_from_json(bad));
}
