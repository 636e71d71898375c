// Acceptance checks: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "corescope/analysis.hpp"
#include "corescope/oracle.hpp"
#include "corescope/plots.hpp"
#include "corescope/store.hpp"

using namespace corescope;

namespace {

// Tolerances.
constexpr int kOracleInstances = 100;
constexpr double kOracleSeconds = 300;
constexpr double kHardestBinSpeedup = 1.5;
constexpr double kFalseNegativeRate = 0.05;
constexpr std::size_t kExpectedFullExperiments = 3264;

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  int compared = 0, agree = 0;
  for (std::uint64_t seed = 0; compared < kOracleInstances && seed < 5000; ++seed) {
    std::mt19937_64 r(seed);
    InfraParams p;
    p.width = p.height = 10;
    p.max_num_cities = 2;
    p.number_of_agents = 2 + static_cast<int>(r() % 2);
    p.city_length = 1 + static_cast<int>(r() % 2);
    p.max_rail_in_city = 1 + static_cast<int>(r() % 2);
    Infrastructure inf;
    Schedule s;
    Malfunction m;
    try {
      inf = generate_infrastructure(p, seed);
      s = generate_schedule(inf, seed);
      m = draw_malfunction(s, 2, 2 + static_cast<Time>(r() % 5), seed);
    } catch (const Error&) {
      continue;
    }
    const auto fp = build_full_problem(inf, s, m, {}, 4, 1 + static_cast<Time>(r() % 5));
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
      agree += got.status == SolveStatus::Infeasible;
    } else {
      agree += got.solution && got.status == SolveStatus::Optimal && got.solution->cost == *want &&
               solution_violations(fp, got.solution->runs).empty() && find_conflicts(got.solution->runs).empty();
    }
  }
  const double t = seconds_since(t0);
  report(1, compared >= kOracleInstances && agree == compared && t < kOracleSeconds, "oracle equivalence",
         fmt("%d/%d instances agree in %.1f s (need >= %d, all equal, < %.0f s)", agree, compared, t, kOracleInstances,
             kOracleSeconds));
}

struct DeskRun {
  Agenda agenda;
  std::vector<Infrastructure> infras;
  std::map<std::pair<int, int>, Schedule> schedules;
  std::vector<ExperimentResult> results;
  AgendaSummary summary;
};

DeskRun run_desk(const fs::path& root, int workers) {
  fs::remove_all(root);
  DeskRun d;
  d.agenda = expand_agenda(desk_agenda());
  const Store store(root);
  d.summary = run_agenda(d.agenda, store, workers);
  for (const auto& i : d.agenda.infras) d.infras.push_back(ensure_infrastructure(store, i));
  for (const auto& s : d.agenda.schedules)
    d.schedules[{s.infra_id, s.schedule_id}] =
        ensure_schedule(store, s, d.infras[static_cast<std::size_t>(s.infra_id)]);
  d.results = store.load_results(d.agenda.config.agenda_id);
  return d;
}


void conflict_freeness(const DeskRun& d) {
  std::size_t schedules = 0, solutions = 0, bad = 0;
  for (const auto& [key, s] : d.schedules) {
    ++schedules;
    bad += !verify_conflict_free(s, d.infras[static_cast<std::size_t>(key.first)]).empty();
  }
  auto check = [&](const ExperimentResult& r, const ScoperRun& s) {
    if (!s.solution) return;
    ++solutions;
    Schedule as;
    as.runs = s.solution->runs;
    bad += !verify_conflict_free(as, d.infras[static_cast<std::size_t>(r.id.infra_id)]).empty();
  };
  for (const auto& r : d.results)
    for (const auto& s : r.scopers) {
      check(r, s);
      for (const auto& x : s.samples) check(r, x);
    }
  const bool complete = d.summary.failed.empty() && d.results.size() == d.agenda.experiments.size();
  report(2, complete && bad == 0 && solutions > 0, "conflict-freeness",
         fmt("%zu schedules, %zu solutions, %zu with conflicts; %zu/%zu experiments completed", schedules, solutions,
             bad, d.results.size(), d.agenda.experiments.size()));
}

void cost_ladder(const DeskRun& d) {
  std::size_t proven = 0, checked = 0, nonzero = 0;
  for (const auto& r : d.results) {
    const auto* u = r.find("online_unrestricted");
    if (!u || !u->solved() || !u->stats.proven) continue;
    ++proven;
    for (const char* name : {"upper_bound", "max_speedup", "baseline"}) {
      const auto* s = r.find(name);
      if (!s || !s->solved() || !s->stats.proven) {
        ++nonzero;
        continue;
      }
      ++checked;
      nonzero += s->additional_lateness != 0;
    }
  }
  report(3, proven > 0 && nonzero == 0, "cost-equality ladder",
         fmt("%zu proven instances, %zu scoper runs, %zu with additional lateness or no proven solution", proven,
             checked, nonzero));
}

void containment(const DeskRun& d) {
  const auto& rs = d.agenda.config.reschedule;
  std::size_t instances = 0, contained = 0;
  for (const auto& r : d.results) {
    const auto* u = r.find("online_unrestricted");
    if (!u || !u->solved()) continue;
    ++instances;
    const auto& s = d.schedules.at({r.id.infra_id, r.id.schedule_id});
    const auto full = build_full_problem(d.infras[static_cast<std::size_t>(r.id.infra_id)], s, r.malfunction,
                                         {rs.weight_route_change, rs.weight_lateness_seconds},
                                         rs.number_of_shortest_paths_per_train, rs.max_window_size_from_earliest);
    bool ok = true;
    for (const auto& dir : {scope_max_speedup(s, *u->solution), scope_baseline(s, *u->solution)}) {
      try {
        ok = ok && solution_violations(apply_scope(full, dir), u->solution->runs).empty();
      } catch (const Error&) {
        ok = false;
      }
    }
    contained += ok;
  }
  report(4, instances == d.agenda.experiments.size() && contained == instances, "containment",
         fmt("unrestricted solution feasible in max_speedup and baseline on %zu/%zu instances (%zu experiments)",
             contained, instances, d.agenda.experiments.size()));
}

void speedup_ordering(const AnalysisReport& rep) {
  auto median_nodes = [&](const char* name) {
    const auto* s = rep.stats(name, -1);
    return s ? s->nodes.median : -1.0;
  };
  const double ub = median_nodes("upper_bound"), ms = median_nodes("max_speedup"), bl = median_nodes("baseline"),
               u = median_nodes("online_unrestricted");
  const int hb = rep.hardest_bin();
  const auto* hard = hb >= 0 ? rep.stats("baseline", hb) : nullptr;
  const double sp = hard && hard->speedup.n > 0 ? hard->speedup.median : 0;
  const bool order = ub >= 0 && ub <= ms && ms <= bl && bl <= u;
  report(5, order && sp >= kHardestBinSpeedup, "speed-up ordering",
         fmt("median nodes ub %.0f <= ms %.0f <= bl %.0f <= u %.0f: %s; baseline median speed-up %.2f in hardest bin %d "
             "(%zu experiments, need >= %.1f)",
             ub, ms, bl, u, order ? "yes" : "no", sp, hb, hard ? hard->speedup.n : 0, kHardestBinSpeedup));
}

void heuristic_quality(const AnalysisReport& rep) {
  const PredictionSummary *h = nullptr, *r = nullptr;
  for (const auto& p : rep.prediction) (p.scoper == "heuristic" ? h : r) = &p;
  const bool ok = h && r && h->n > 0 && r->n > 0 && h->false_negative_rate <= kFalseNegativeRate && h->mean_f1 > r->mean_f1;
  report(6, ok, "heuristic scoper quality",
         fmt("false-negative rate %.3f over %zu instances (need <= %.2f); mean F1 heuristic %.3f vs random %.3f",
             h ? h->false_negative_rate : -1.0, h ? h->n : 0, kFalseNegativeRate, h ? h->mean_f1 : 0.0,
             r ? r->mean_f1 : 0.0));
}

void random_quality(const DeskRun& d, const AnalysisReport& rep) {
  const auto* h = rep.stats("heuristic", -1);
  const auto* r = rep.stats("random", -1);
  std::size_t recorded = 0, infeasible = 0, errors = 0;
  for (const auto& x : d.results) {
    const auto* s = x.find("random");
    if (!s) continue;
    ++recorded;
    errors += s->outcome == "error";
    for (const auto& smp : s->samples) infeasible += smp.outcome == "solved" && !smp.solution;
  }
  const double hm = h ? h->additional_lateness.mean : 0, rm = r ? r->additional_lateness.mean : 0;
  const bool ok = h && r && rm > hm && errors == 0 && recorded == d.results.size() && d.summary.failed.empty();
  report(7, ok, "random scoper quality",
         fmt("mean additional lateness random %.2f vs heuristic %.2f; %zu draws infeasible and recorded; %zu/%zu "
             "experiments with a random entry, %zu errors",
             rm, hm, infeasible, recorded, d.results.size(), errors));
}

void range_expansion() {
  const auto a = expand_range({8, 15, 3});
  const auto b = expand_range({1, 2, 2});
  const auto n = expand_agenda(full_agenda()).experiments.size();
  const bool ok = a == std::vector<long long>{8, 10, 12} && b == std::vector<long long>{1, 1} &&
                  n == kExpectedFullExperiments;
  auto show = [](const std::vector<long long>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
  };
  report(8, ok, "range expansion",
         fmt("[8,15,3] -> %s, [1,2,2] -> %s, full-scale agenda %zu ids (need %zu)", show(a).c_str(), show(b).c_str(), n,
             kExpectedFullExperiments));
}

std::vector<std::string> comparable(const std::vector<ExperimentResult>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(comparable_json(r).dump());
  return out;
}

void determinism(const DeskRun& first, const fs::path& root, int workers) {
  const auto again = run_desk(root / "rerun", 1);
  const auto parallel = run_desk(root / "parallel", workers);
  const auto base = comparable(first.results);
  const bool rerun_ok = comparable(again.results) == base;
  const bool parallel_ok = comparable(parallel.results) == base;
  bool inputs_ok = true;
  for (const auto& [k, s] : first.schedules)
    inputs_ok = inputs_ok && again.schedules.at(k) == s && parallel.schedules.at(k) == s;
  report(9, !base.empty() && rerun_ok && parallel_ok && inputs_ok, "determinism",
         fmt("%zu results; re-run %s, workers=%d vs 1 %s, inputs %s", base.size(), rerun_ok ? "identical" : "differs",
             workers, parallel_ok ? "identical" : "differs", inputs_ok ? "identical" : "differ"));
}

void metric_formulas() {
  const auto q = prediction_quality({0, 1, 2, 3}, {0, 1});
  const double s = speedup(100, 50);
  report(10, std::abs(q.f1 - 2.0 / 3.0) < 1e-12 && s == 2.0, "metric formulas",
         fmt("F1(core {a,b}, predicted {a,b,c,d}) = %.6f (want 2/3); speedup(100, 50) = %.3f (want 2)", q.f1, s));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string root = "acceptance_store";
  int workers = 8;
  app.add_option("--store", root, "Scratch store; wiped and refilled")->capture_default_str();
  app.add_option("--workers", workers, "Worker count compared against the sequential run")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  oracle_equivalence();
  const auto t0 = std::chrono::steady_clock::now();
  // The timed run is sequential so experiments do not compete for cores.
  const auto desk = run_desk(fs::path(root) / "desk", 1);
  std::printf("# desk agenda: %zu experiments in %.1f s, %zu failed\n", desk.agenda.experiments.size(),
              seconds_since(t0), desk.summary.failed.size());
  for (const auto& [id, why] : desk.summary.failed) std::printf("#   %s: %s\n", id.c_str(), why.c_str());
  const auto rep = analyze(desk.results);
  write_report(rep, fs::path(root) / "desk" / "analysis");
  conflict_freeness(desk);
  cost_ladder(desk);
  containment(desk);
  speedup_ordering(rep);
  heuristic_quality(rep);
  random_quality(desk, rep);
  range_expansion();
  determinism(desk, root, workers);
  metric_formulas();
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
