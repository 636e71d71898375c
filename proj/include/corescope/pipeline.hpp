#pragma once

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "corescope/infrastructure.hpp"
#include "corescope/metrics.hpp"
#include "corescope/resched.hpp"
#include "corescope/scheduling.hpp"
#include "corescope/scopers.hpp"
#include "corescope/serialize.hpp"
#include "corescope/solver.hpp"

namespace corescope {

/// [a, b, n]: n = 1 is just a; otherwise n points from [a, b) with step
/// floor((b - a) / n).
struct ValueRange {
  long long a = 0;
  long long b = 0;
  long long n = 1;

  static ValueRange single(long long v) { return {v, v, 1}; }
  bool operator==(const ValueRange&) const = default;
};

inline std::vector<long long> expand_range(const ValueRange& r) {
  if (r.n < 1) throw InvalidRange("range point count must be >= 1");
  if (r.n == 1) return {r.a};
  if (r.b < r.a) throw InvalidRange("range end must not precede its start");
  const long long step = (r.b - r.a) / r.n;
  std::vector<long long> out;
  out.reserve(static_cast<std::size_t>(r.n));
  for (long long i = 0; i < r.n; ++i) out.push_back(r.a + i * step);
  return out;
}

inline void to_json(json& j, const ValueRange& r) { j = json::array({r.a, r.b, r.n}); }
/// Accepts [a, b, n], [a, b] (n = b - a) or a plain number.
inline void from_json(const json& j, ValueRange& r) {
  if (j.is_number_integer()) {
    r = ValueRange::single(j.get<long long>());
    return;
  }
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw SchemaError("a range is a number, [a, b] or [a, b, n]");
  r.a = j.at(0).get<long long>();
  r.b = j.at(1).get<long long>();
  r.n = j.size() == 3 ? j.at(2).get<long long>() : r.b - r.a;
}

struct InfraRanges {
  ValueRange width = ValueRange::single(40);
  ValueRange height = ValueRange::single(40);
  ValueRange flatland_seed_value = ValueRange::single(190);
  ValueRange max_num_cities{4, 7, 3};
  ValueRange max_rail_between_cities = ValueRange::single(1);
  ValueRange max_rail_in_city = ValueRange::single(2);
  ValueRange number_of_agents{8, 16, 4};
  int number_of_shortest_paths_per_train = 10;
  int city_length = 4;
  std::array<double, 4> speed_data{0.25, 0.25, 0.25, 0.25};
  bool operator==(const InfraRanges&) const = default;
};

struct ScheduleRanges {
  ValueRange schedule_id{0, 2, 2};
  /// Schedule s is generated with seed asp_seed_value + s.
  long long asp_seed_value = 814;
  int number_of_shortest_paths_per_train_schedule = 1;
  bool operator==(const ScheduleRanges&) const = default;
};

struct RescheduleRanges {
  ValueRange earliest_malfunction = ValueRange::single(30);
  ValueRange malfunction_duration = ValueRange::single(15);
  /// Ids at or beyond an infrastructure's train count are dropped.
  ValueRange malfunction_train_id{0, 14, 3};
  int number_of_shortest_paths_per_train = 10;
  Time max_window_size_from_earliest = 60;
  Cost weight_route_change = 30;
  Cost weight_lateness_seconds = 1;
  bool operator==(const RescheduleRanges&) const = default;
};

struct RunConfig {
  ValueRange run = ValueRange::single(0);
  int random_seeds = 5;
  SolveBudget budget{20.0, 200'000};
  /// Lateness charged to a random-scope run that finds no solution.
  Cost infeasible_penalty = 1000;
  /// Solves shorter than repeat_below_s in total are repeated up to
  /// timing_repeats times and timed by the fastest repeat.
  int timing_repeats = 9;
  double repeat_below_s = 1.0;
  bool operator==(const RunConfig& o) const {
    return run == o.run && random_seeds == o.random_seeds && budget.time_limit_s == o.budget.time_limit_s &&
           budget.max_branchings == o.budget.max_branchings && infeasible_penalty == o.infeasible_penalty &&
           timing_repeats == o.timing_repeats && repeat_below_s == o.repeat_below_s;
  }
};

struct AgendaConfig {
  std::string agenda_id = "desk";
  InfraRanges infra;
  ScheduleRanges schedule;
  RescheduleRanges reschedule;
  RunConfig runs;
  /// Difficulty range in seconds of unrestricted solve time; hi <= lo means
  /// the observed minimum and maximum.
  double difficulty_lo = 0;
  double difficulty_hi = 0;
  bool operator==(const AgendaConfig&) const = default;
};

/// The desk-scale agenda: 12 infrastructures on 40x40 grids, 2 schedules each,
/// up to 3 malfunctions per schedule.
inline AgendaConfig desk_agenda() { return {}; }

/// The full-scale agenda: 100x100 grids, 8-12 cities, 50-86 trains, 4
/// schedules each and one malfunction per train.
inline AgendaConfig full_agenda() {
  AgendaConfig c;
  c.agenda_id = "full";
  c.infra.width = c.infra.height = ValueRange::single(100);
  c.infra.max_num_cities = {8, 15, 3};
  c.infra.number_of_agents = {50, 98, 4};
  c.schedule.schedule_id = {0, 4, 4};
  c.reschedule.malfunction_duration = ValueRange::single(50);
  c.reschedule.malfunction_train_id = {0, 86, 86};
  c.runs.budget = {200.0, 2'000'000};
  c.difficulty_lo = 20;
  c.difficulty_hi = 200;
  return c;
}

struct InfraSpec {
  int infra_id = 0;
  InfraParams params;
  std::uint64_t seed = 0;
};

struct ScheduleSpec {
  int infra_id = 0;
  int schedule_id = 0;
  std::uint64_t seed = 0;
  ScheduleParams params;
};

struct ExperimentId {
  int infra_id = 0;
  int schedule_id = 0;
  int malfunction_id = 0;
  int run = 0;
  auto operator<=>(const ExperimentId&) const = default;
  std::string str() const {
    return std::to_string(infra_id) + "_" + std::to_string(schedule_id) + "_" + std::to_string(malfunction_id) + "_" +
           std::to_string(run);
  }
};

struct ExperimentSpec {
  ExperimentId id;
  TrainId malfunction_train = 0;
  Time earliest_malfunction = 30;
  Time malfunction_duration = 15;
};

struct Agenda {
  AgendaConfig config;
  std::vector<InfraSpec> infras;
  std::vector<ScheduleSpec> schedules;
  std::vector<ExperimentSpec> experiments;
};

namespace pipeline_detail {

inline int as_int(long long v, const char* what) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw InvalidRange(std::string(what) + " out of range");
  return static_cast<int>(v);
}

}  // namespace pipeline_detail

/// Cartesian expansion level by level, in a fixed nesting order (last field
/// varies fastest).
inline Agenda expand_agenda(const AgendaConfig& c) {
  using pipeline_detail::as_int;
  Agenda ag;
  ag.config = c;
  int next_infra = 0;
  for (auto w : expand_range(c.infra.width))
    for (auto h : expand_range(c.infra.height))
      for (auto seed : expand_range(c.infra.flatland_seed_value))
        for (auto cities : expand_range(c.infra.max_num_cities))
          for (auto between : expand_range(c.infra.max_rail_between_cities))
            for (auto in_city : expand_range(c.infra.max_rail_in_city))
              for (auto agents : expand_range(c.infra.number_of_agents)) {
                InfraSpec s;
                s.params.width = as_int(w, "width");
                s.params.height = as_int(h, "height");
                s.params.max_num_cities = as_int(cities, "max_num_cities");
                s.params.max_rail_between_cities = as_int(between, "max_rail_between_cities");
                s.params.max_rail_in_city = as_int(in_city, "max_rail_in_city");
                s.params.number_of_agents = as_int(agents, "number_of_agents");
                s.params.number_of_shortest_paths_per_train = c.infra.number_of_shortest_paths_per_train;
                s.params.city_length = c.infra.city_length;
                s.params.speed_data = c.infra.speed_data;
                s.seed = static_cast<std::uint64_t>(seed);
                const bool dup = std::any_of(ag.infras.begin(), ag.infras.end(), [&](const InfraSpec& o) {
                  return o.params == s.params && o.seed == s.seed;
                });
                if (dup) continue;
                s.infra_id = next_infra++;
                ag.infras.push_back(s);
              }
  const auto schedule_ids = expand_range(c.schedule.schedule_id);
  const auto train_ids = expand_range(c.reschedule.malfunction_train_id);
  const auto runs = expand_range(c.runs.run);
  for (const auto& inf : ag.infras) {
    std::vector<int> seen;
    for (auto sid : schedule_ids) {
      const int s = as_int(sid, "schedule_id");
      // Duplicate expansions such as [1,2,2] collapse to one instance.
      if (std::find(seen.begin(), seen.end(), s) != seen.end()) continue;
      seen.push_back(s);
      ScheduleSpec ss;
      ss.infra_id = inf.infra_id;
      ss.schedule_id = s;
      ss.seed = static_cast<std::uint64_t>(c.schedule.asp_seed_value + s);
      ss.params.paths_per_train = c.schedule.number_of_shortest_paths_per_train_schedule;
      ag.schedules.push_back(ss);
      int mid = 0;
      std::vector<std::tuple<TrainId, Time, Time>> cases;
      for (auto t : train_ids) {
        if (t < 0 || t >= inf.params.number_of_agents) continue;
        for (auto em : expand_range(c.reschedule.earliest_malfunction))
          for (auto d : expand_range(c.reschedule.malfunction_duration)) {
            const std::tuple<TrainId, Time, Time> key{as_int(t, "malfunction_train_id"), as_int(em, "earliest_malfunction"),
                                                      as_int(d, "malfunction_duration")};
            if (std::find(cases.begin(), cases.end(), key) != cases.end()) continue;
            cases.push_back(key);
            std::vector<int> seen_runs;
            for (auto r : runs) {
              const int run = as_int(r, "run");
              if (std::find(seen_runs.begin(), seen_runs.end(), run) != seen_runs.end()) continue;
              seen_runs.push_back(run);
              ag.experiments.push_back({{inf.infra_id, s, mid, run}, std::get<0>(key), std::get<1>(key), std::get<2>(key)});
            }
            ++mid;
          }
      }
    }
  }
  if (ag.experiments.empty()) throw EmptyAgenda("agenda expands to no experiments");
  return ag;
}

inline json agenda_config_to_json(const AgendaConfig& c) {
  return serialize_detail::document(
      "agenda",
      {{"agenda_id", c.agenda_id},
       {"infrastructure",
        {{"width", c.infra.width},
         {"height", c.infra.height},
         {"flatland_seed_value", c.infra.flatland_seed_value},
         {"max_num_cities", c.infra.max_num_cities},
         {"max_rail_between_cities", c.infra.max_rail_between_cities},
         {"max_rail_in_city", c.infra.max_rail_in_city},
         {"number_of_agents", c.infra.number_of_agents},
         {"number_of_shortest_paths_per_train", c.infra.number_of_shortest_paths_per_train},
         {"city_length", c.infra.city_length},
         {"speed_data", c.infra.speed_data}}},
       {"schedule",
        {{"schedule_id", c.schedule.schedule_id},
         {"asp_seed_value", c.schedule.asp_seed_value},
         {"number_of_shortest_paths_per_train_schedule", c.schedule.number_of_shortest_paths_per_train_schedule}}},
       {"reschedule",
        {{"earliest_malfunction", c.reschedule.earliest_malfunction},
         {"malfunction_duration", c.reschedule.malfunction_duration},
         {"malfunction_train_id", c.reschedule.malfunction_train_id},
         {"number_of_shortest_paths_per_train", c.reschedule.number_of_shortest_paths_per_train},
         {"max_window_size_from_earliest", c.reschedule.max_window_size_from_earliest},
         {"weight_route_change", c.reschedule.weight_route_change},
         {"weight_lateness_seconds", c.reschedule.weight_lateness_seconds}}},
       {"runs",
        {{"run", c.runs.run},
         {"random_seeds", c.runs.random_seeds},
         {"time_limit_s", c.runs.budget.time_limit_s},
         {"max_branchings", c.runs.budget.max_branchings},
         {"infeasible_penalty", c.runs.infeasible_penalty},
         {"timing_repeats", c.runs.timing_repeats},
         {"repeat_below_s", c.runs.repeat_below_s}}},
       {"difficulty", {c.difficulty_lo, c.difficulty_hi}}});
}

/// Missing fields keep the values of `base`, so a config file only lists
/// what differs.
inline AgendaConfig agenda_config_from_json(const json& j, AgendaConfig base = desk_agenda()) {
  if (!j.is_object()) throw SchemaError("agenda config must be an object");
  if (j.contains("schema")) serialize_detail::expect(j, "agenda");
  AgendaConfig c = std::move(base);
  auto get = [](const json& o, const char* key, auto& field) {
    if (o.contains(key)) field = o.at(key).get<std::decay_t<decltype(field)>>();
  };
  get(j, "agenda_id", c.agenda_id);
  if (j.contains("infrastructure")) {
    const auto& o = j.at("infrastructure");
    get(o, "width", c.infra.width);
    get(o, "height", c.infra.height);
    get(o, "flatland_seed_value", c.infra.flatland_seed_value);
    get(o, "max_num_cities", c.infra.max_num_cities);
    get(o, "max_rail_between_cities", c.infra.max_rail_between_cities);
    get(o, "max_rail_in_city", c.infra.max_rail_in_city);
    get(o, "number_of_agents", c.infra.number_of_agents);
    get(o, "number_of_shortest_paths_per_train", c.infra.number_of_shortest_paths_per_train);
    get(o, "city_length", c.infra.city_length);
    get(o, "speed_data", c.infra.speed_data);
  }
  if (j.contains("schedule")) {
    const auto& o = j.at("schedule");
    get(o, "schedule_id", c.schedule.schedule_id);
    get(o, "asp_seed_value", c.schedule.asp_seed_value);
    get(o, "number_of_shortest_paths_per_train_schedule", c.schedule.number_of_shortest_paths_per_train_schedule);
  }
  if (j.contains("reschedule")) {
    const auto& o = j.at("reschedule");
    get(o, "earliest_malfunction", c.reschedule.earliest_malfunction);
    get(o, "malfunction_duration", c.reschedule.malfunction_duration);
    get(o, "malfunction_train_id", c.reschedule.malfunction_train_id);
    get(o, "number_of_shortest_paths_per_train", c.reschedule.number_of_shortest_paths_per_train);
    get(o, "max_window_size_from_earliest", c.reschedule.max_window_size_from_earliest);
    get(o, "weight_route_change", c.reschedule.weight_route_change);
    get(o, "weight_lateness_seconds", c.reschedule.weight_lateness_seconds);
  }
  if (j.contains("runs")) {
    const auto& o = j.at("runs");
    get(o, "run", c.runs.run);
    get(o, "random_seeds", c.runs.random_seeds);
    get(o, "time_limit_s", c.runs.budget.time_limit_s);
    get(o, "max_branchings", c.runs.budget.max_branchings);
    get(o, "infeasible_penalty", c.runs.infeasible_penalty);
    get(o, "timing_repeats", c.runs.timing_repeats);
    get(o, "repeat_below_s", c.runs.repeat_below_s);
  }
  if (j.contains("difficulty")) {
    c.difficulty_lo = j.at("difficulty").at(0);
    c.difficulty_hi = j.at("difficulty").at(1);
  }
  if (c.runs.random_seeds < 0) throw InvalidRange("random_seeds must be >= 0");
  return c;
}

}  // namespace corescope
