// corescope: command-line front end for generation, experiments and analysis.
//
// Every subcommand prints one JSON object per line on stdout. Exit codes:
// 0 success, 1 generation/solve/verification failure, 2 usage or input error.

#include <atomic>
#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "corescope/analysis.hpp"
#include "corescope/plots.hpp"
#include "corescope/store.hpp"

using namespace corescope;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

/// Bad input rather than a failed computation: exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

void emit(const json& j) { std::cout << j.dump() << '\n' << std::flush; }

json read_input(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  return read_json_file(path);
}

AgendaConfig load_config(const std::string& path, bool full) {
  const AgendaConfig base = full ? full_agenda() : desk_agenda();
  if (path.empty()) return base;
  return agenda_config_from_json(read_input(path), base);
}

Infrastructure load_infrastructure(const Store& store, const std::string& path, int infra_id) {
  const std::string p = path.empty() ? store.infra_file(infra_id).string() : path;
  return infrastructure_from_json(read_input(p));
}

Schedule load_schedule(const Store& store, const std::string& path, int infra_id, int schedule_id) {
  const std::string p = path.empty() ? store.schedule_file(infra_id, schedule_id).string() : path;
  return schedule_from_json(read_input(p));
}

json scoper_summary(const ScoperRun& r) {
  json j = {{"scoper", r.scoper}, {"outcome", r.outcome}};
  if (r.outcome != "solved") {
    j["reason"] = r.reason;
    return j;
  }
  j["status"] = status_name(r.status);
  j["time_s"] = r.time_s;
  j["speedup"] = r.speedup;
  j["nodes"] = r.stats.nodes_expanded;
  j["additional_lateness"] = r.additional_lateness;
  if (r.solution) j["cost"] = r.solution->cost;
  if (r.prediction) j["f1"] = r.prediction->f1;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corescope: train rescheduling experiments with problem scoping"};
  app.require_subcommand(1);
  std::string store_dir = store_root().string();
  app.add_option("--store", store_dir, "Store root; defaults to $CORESCOPE_STORE, else ./store");

  // gen-infra
  auto* gi = app.add_subcommand("gen-infra", "Generate one infrastructure with its trains");
  InfraParams ip;
  int gi_id = 0;
  std::uint64_t flatland_seed = 190;
  std::string gi_out;
  gi->add_option("--infra-id", gi_id, "Infrastructure id in the store")->capture_default_str();
  gi->add_option("--flatland-seed-value", flatland_seed, "Generator seed")->capture_default_str();
  gi->add_option("--width", ip.width, "Grid width")->capture_default_str()->check(CLI::Range(5, 1000));
  gi->add_option("--height", ip.height, "Grid height")->capture_default_str()->check(CLI::Range(5, 1000));
  gi->add_option("--max-num-cities", ip.max_num_cities, "Cities to place")->capture_default_str()->check(CLI::PositiveNumber);
  gi->add_option("--max-rail-between-cities", ip.max_rail_between_cities, "Parallel rails between two cities")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gi->add_option("--max-rail-in-city", ip.max_rail_in_city, "Parallel tracks inside a city")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gi->add_option("--number-of-agents", ip.number_of_agents, "Trains")->capture_default_str()->check(CLI::PositiveNumber);
  gi->add_option("--number-of-shortest-paths-per-train", ip.number_of_shortest_paths_per_train,
                 "Routes per train in the route graph")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gi->add_option("--city-length", ip.city_length, "Cells per city track")->capture_default_str()->check(CLI::PositiveNumber);
  gi->add_option("--out", gi_out, "Output file; defaults to the store");

  // gen-schedule
  auto* gs = app.add_subcommand("gen-schedule", "Generate a conflict-free schedule for an infrastructure");
  int gs_infra = 0, gs_id = 0;
  long long asp_seed = 814;
  ScheduleParams sp;
  std::string gs_infra_path, gs_out;
  gs->add_option("--infra-id", gs_infra, "Infrastructure id in the store")->capture_default_str();
  gs->add_option("--schedule-id", gs_id, "Schedule id; the seed is asp-seed-value plus this")->capture_default_str();
  gs->add_option("--asp-seed-value", asp_seed, "Base schedule seed")->capture_default_str();
  gs->add_option("--number-of-shortest-paths-per-train-schedule", sp.paths_per_train, "Route candidates per train")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gs->add_option("--infrastructure", gs_infra_path, "Infrastructure file; defaults to the store");
  gs->add_option("--out", gs_out, "Output file; defaults to the store");

  // gen-malfunction
  auto* gm = app.add_subcommand("gen-malfunction", "Create a malfunction for a scheduled train");
  int gm_infra = 0, gm_sched = 0, gm_id = 0;
  std::optional<int> gm_train;
  Time earliest = 30, duration = 15;
  std::string gm_sched_path, gm_out;
  gm->add_option("--infra-id", gm_infra, "Infrastructure id in the store")->capture_default_str();
  gm->add_option("--schedule-id", gm_sched, "Schedule id in the store")->capture_default_str();
  gm->add_option("--malfunction-id", gm_id, "Malfunction id in the store")->capture_default_str();
  gm->add_option("--malfunction-agent-id", gm_train, "Train to stop; defaults to the malfunction id");
  gm->add_option("--earliest-malfunction", earliest, "Earliest step of the stop")->capture_default_str()->check(CLI::NonNegativeNumber);
  gm->add_option("--malfunction-duration", duration, "Steps the train stands still")->capture_default_str()->check(CLI::PositiveNumber);
  gm->add_option("--schedule", gm_sched_path, "Schedule file; defaults to the store");
  gm->add_option("--out", gm_out, "Output file; defaults to the store");

  // run-experiment
  auto* rx = app.add_subcommand("run-experiment", "Run every scoper on one stored malfunction");
  ExperimentId rx_id;
  std::string rx_config, rx_agenda;
  bool rx_full = false;
  rx->add_option("--infra-id", rx_id.infra_id, "Infrastructure id")->capture_default_str();
  rx->add_option("--schedule-id", rx_id.schedule_id, "Schedule id")->capture_default_str();
  rx->add_option("--malfunction-id", rx_id.malfunction_id, "Malfunction id")->capture_default_str();
  rx->add_option("--run", rx_id.run, "Run index")->capture_default_str();
  rx->add_option("--config", rx_config, "Agenda config supplying rescheduling and run parameters");
  rx->add_flag("--full", rx_full, "Start from the full-scale agenda instead of the desk-scale one");
  rx->add_option("--agenda-id", rx_agenda, "Result directory under runs/; defaults to the config's");

  // run-agenda
  auto* ra = app.add_subcommand("run-agenda", "Expand an agenda and run all missing experiments");
  std::string ra_config, ra_agenda;
  bool ra_full = false, ra_dry = false;
  int workers = 1;
  ra->add_option("--config", ra_config, "Agenda config file; fields not given keep their defaults");
  ra->add_flag("--full", ra_full, "Start from the full-scale agenda instead of the desk-scale one");
  ra->add_option("--agenda-id", ra_agenda, "Override the agenda id");
  ra->add_option("--workers", workers, "Parallel experiments; use 1 for clean timings")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));
  ra->add_flag("--dry-run", ra_dry, "Print the expansion counts and stop");

  // analyze
  auto* an = app.add_subcommand("analyze", "Bin results by difficulty and write CSV and SVG reports");
  std::string an_agenda = "desk", an_out;
  AnalysisOptions ao;
  an->add_option("--agenda-id", an_agenda, "Result directory under runs/")->capture_default_str();
  an->add_option("--bins", ao.bins, "Equidistant difficulty bins")->capture_default_str()->check(CLI::PositiveNumber);
  an->add_option("--min-time", ao.min_time, "Keep experiments whose unrestricted solve took at least this many seconds");
  an->add_option("--max-time", ao.max_time, "Keep experiments whose unrestricted solve took at most this many seconds");
  an->add_option("--out", an_out, "Report directory; defaults to <store>/analysis/<agenda-id>");

  // render
  auto* rn = app.add_subcommand("render", "Draw an infrastructure, optionally with a schedule, as SVG");
  int rn_infra = 0;
  std::optional<int> rn_sched;
  std::string rn_infra_path, rn_sched_path, rn_out = "render.svg";
  rn->add_option("--infra-id", rn_infra, "Infrastructure id in the store")->capture_default_str();
  rn->add_option("--schedule-id", rn_sched, "Schedule id in the store to overlay");
  rn->add_option("--infrastructure", rn_infra_path, "Infrastructure file instead of the store");
  rn->add_option("--schedule", rn_sched_path, "Schedule file to overlay");
  rn->add_option("--out", rn_out, "SVG output file")->capture_default_str();

  // verify
  auto* vf = app.add_subcommand("verify", "Check a schedule for resource conflicts and illegal moves");
  std::string vf_sched, vf_infra;
  vf->add_option("--schedule", vf_sched, "Schedule file")->required();
  vf->add_option("--infrastructure", vf_infra, "Infrastructure file; defaults to the store entry of the schedule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const Store store(store_dir);
  try {
    if (*gi) {
      auto inf = generate_infrastructure(ip, flatland_seed);
      inf.infra_id = std::to_string(gi_id);
      const fs::path out = gi_out.empty() ? store.infra_file(gi_id) : fs::path(gi_out);
      atomic_write(out, infrastructure_to_json(inf).dump(1));
      emit({{"event", "generated"},
            {"artifact", "infrastructure"},
            {"path", out.string()},
            {"cities", inf.cities.size()},
            {"trains", inf.trains.size()}});
    } else if (*gs) {
      const auto inf = load_infrastructure(store, gs_infra_path, gs_infra);
      auto s = generate_schedule(inf, static_cast<std::uint64_t>(asp_seed + gs_id), sp, std::to_string(gs_id));
      s.infra_id = inf.infra_id;
      const int infra_id = gs_infra_path.empty() ? gs_infra : std::stoi(inf.infra_id);
      const fs::path out = gs_out.empty() ? store.schedule_file(infra_id, gs_id) : fs::path(gs_out);
      atomic_write(out, schedule_to_json(s).dump(1));
      emit({{"event", "generated"},
            {"artifact", "schedule"},
            {"path", out.string()},
            {"trains", s.runs.size()},
            {"total_arrival", s.total_arrival()}});
    } else if (*gm) {
      const auto s = load_schedule(store, gm_sched_path, gm_infra, gm_sched);
      const TrainId train = gm_train.value_or(gm_id);
      if (train < 0 || static_cast<std::size_t>(train) >= s.runs.size())
        throw UsageError("malfunction agent " + std::to_string(train) + " is not in the schedule");
      const auto m = malfunction_for(s, train, earliest, duration);
      const fs::path out = gm_out.empty() ? store.malfunction_file(gm_infra, gm_sched, gm_id) : fs::path(gm_out);
      atomic_write(out, malfunction_to_json(m).dump(1));
      emit({{"event", "generated"},
            {"artifact", "malfunction"},
            {"path", out.string()},
            {"train", m.train},
            {"time", m.time},
            {"duration", m.duration},
            {"vacuous", is_vacuous(m, s)}});
    } else if (*rx) {
      auto config = load_config(rx_config, rx_full);
      if (!rx_agenda.empty()) config.agenda_id = rx_agenda;
      const auto inf = load_infrastructure(store, "", rx_id.infra_id);
      const auto s = load_schedule(store, "", rx_id.infra_id, rx_id.schedule_id);
      const auto mpath = store.malfunction_file(rx_id.infra_id, rx_id.schedule_id, rx_id.malfunction_id);
      const auto m = malfunction_from_json(read_input(mpath.string()));
      const auto result = run_experiment(inf, s, m, config, rx_id);
      const auto out = store.result_file(config.agenda_id, rx_id);
      atomic_write(out, result_to_json(result).dump());
      json scopers = json::array();
      for (const auto& r : result.scopers) scopers.push_back(scoper_summary(r));
      emit({{"event", "done"}, {"id", rx_id.str()}, {"path", out.string()}, {"core_trains", result.core_trains},
            {"scopers", scopers}});
      const auto* u = result.find("online_unrestricted");
      return u && u->solved() ? 0 : 1;
    } else if (*ra) {
      auto config = load_config(ra_config, ra_full);
      if (!ra_agenda.empty()) config.agenda_id = ra_agenda;
      const auto agenda = expand_agenda(config);
      emit({{"event", "expanded"},
            {"agenda_id", config.agenda_id},
            {"infrastructures", agenda.infras.size()},
            {"schedules", agenda.schedules.size()},
            {"experiments", agenda.experiments.size()}});
      if (ra_dry) return 0;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const auto summary =
          run_agenda(agenda, store, workers, [](const AgendaProgress& p) { std::cout << progress_line(p) << '\n' << std::flush; },
                     &g_stop);
      json failed = json::array();
      for (const auto& [id, why] : summary.failed) failed.push_back({{"id", id}, {"reason", why}});
      emit({{"event", "summary"},
            {"total", summary.total},
            {"done", summary.done},
            {"resumed", summary.resumed},
            {"cancelled", summary.cancelled},
            {"failed", failed}});
      return summary.failed.empty() && summary.cancelled == 0 ? 0 : 1;
    } else if (*an) {
      if (fs::exists(store.runs_dir(an_agenda) / "agenda.json") && !ao.min_time && !ao.max_time) {
        const auto cfg = agenda_config_from_json(read_json_file((store.runs_dir(an_agenda) / "agenda.json").string()));
        if (cfg.difficulty_hi > cfg.difficulty_lo) {
          ao.min_time = cfg.difficulty_lo;
          ao.max_time = cfg.difficulty_hi;
        }
      }
      const auto report = analyze(store.load_results(an_agenda), ao);
      for (const auto& w : report.warnings) emit({{"event", "warning"}, {"message", w}});
      const fs::path dir = an_out.empty() ? store.root() / "analysis" / an_agenda : fs::path(an_out);
      const auto files = write_report(report, dir);
      json hardest = json::object();
      if (const int b = report.hardest_bin(); b >= 0) {
        hardest["bin"] = b;
        for (const auto& name : scoper_names())
          if (const auto* st = report.stats(name, b); st && st->speedup.n > 0) hardest[name] = st->speedup.median;
      }
      json written = json::array();
      for (const auto& f : files) written.push_back(f.string());
      emit({{"event", "analyzed"},
            {"loaded", report.loaded},
            {"kept", report.kept},
            {"range_s", {report.lo, report.hi}},
            {"bins", report.bins},
            {"histogram", report.histogram},
            {"hardest_bin_median_speedup", hardest},
            {"files", written}});
    } else if (*rn) {
      const auto inf = load_infrastructure(store, rn_infra_path, rn_infra);
      std::optional<Schedule> s;
      if (!rn_sched_path.empty() || rn_sched) s = load_schedule(store, rn_sched_path, rn_infra, rn_sched.value_or(0));
      atomic_write(rn_out, render_svg(inf, s ? &*s : nullptr));
      emit({{"event", "rendered"}, {"path", rn_out}});
    } else if (*vf) {
      const auto s = schedule_from_json(read_input(vf_sched));
      std::string ipath = vf_infra;
      if (ipath.empty()) {
        try {
          ipath = store.infra_file(std::stoi(s.infra_id)).string();
        } catch (const std::logic_error&) {
          throw UsageError("schedule has no numeric infra_id; pass --infrastructure");
        }
      }
      const auto inf = infrastructure_from_json(read_input(ipath));
      const auto graph = to_graph(inf);
      std::size_t problems = 0;
      for (const auto& r : s.runs) {
        TrainSpec spec;
        try {
          spec = inf.train(r.train);
        } catch (const Error& e) {
          emit({{"event", "violation"}, {"message", e.what()}});
          ++problems;
          continue;
        }
        for (const auto& v : run_violations(r, spec, graph, false)) {
          emit({{"event", "violation"}, {"message", v}});
          ++problems;
        }
      }
      for (const auto& c : find_conflicts(s.runs)) {
        emit({{"event", "conflict"}, {"cell", c.cell}, {"trains", {c.train_a, c.train_b}}, {"from", c.from}, {"to", c.to}});
        ++problems;
      }
      emit({{"event", "verified"}, {"path", vf_sched}, {"runs", s.runs.size()}, {"problems", problems}});
      return problems == 0 ? 0 : 1;
    }
  } catch (const UsageError& e) {
    emit({{"event", "error"}, {"message", e.what()}});
    return 2;
  } catch (const SchemaError& e) {
    emit({{"event", "error"}, {"message", std::string("invalid input: ") + e.what()}});
    return 2;
  } catch (const InvalidRange& e) {
    emit({{"event", "error"}, {"message", e.what()}});
    return 2;
  } catch (const json::exception& e) {
    emit({{"event", "error"}, {"message", std::string("invalid input: ") + e.what()}});
    return 2;
  } catch (const std::exception& e) {
    emit({{"event", "error"}, {"message", e.what()}});
    return 1;
  }
  return 0;
}
