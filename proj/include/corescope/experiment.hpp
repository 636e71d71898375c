#pragma once

#include <unistd.h>

#include <chrono>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "corescope/metrics.hpp"
#include "corescope/pipeline.hpp"

namespace corescope {

/// One scoper applied to one experiment.
struct ScoperRun {
  std::string scoper;
  /// "solved", "skipped" or "error"; only solved runs carry a status.
  std::string outcome = "solved";
  std::string reason;
  std::optional<ScopeDirective> directive;
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<Solution> solution;
  SolveStats stats;
  /// Scope application plus solve, seconds.
  double time_s = 0;
  int flexible_trains = 0;
  double space_log10 = 0;

  double speedup = 0;
  Cost additional_lateness = 0;
  bool lateness_flagged = false;
  /// Online scopers only: predicted flexible trains against the core problem.
  std::optional<PredictionQuality> prediction;
  /// Random scoper: the individual draws; the fields above are their means.
  std::vector<ScoperRun> samples;
  std::optional<std::uint64_t> seed;

  bool solved() const { return outcome == "solved" && solution.has_value(); }
};

struct Environment {
  std::string host;
  unsigned threads = 0;
  std::string compiler;
  bool operator==(const Environment&) const = default;
};

inline Environment current_environment() {
  Environment e;
  char host[256] = {};
  if (gethostname(host, sizeof host - 1) == 0) e.host = host;
  e.threads = std::thread::hardware_concurrency();
#if defined(__clang__)
  e.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  e.compiler = "gcc " __VERSION__;
#else
  e.compiler = "unknown";
#endif
  return e;
}

struct ExperimentResult {
  ExperimentId id;
  Malfunction malfunction;
  bool vacuous = false;
  int trains = 0;
  std::vector<TrainId> core_trains;
  int core_nodes = 0;
  /// Building the full problem (shared by every scoper), seconds.
  double build_s = 0;
  std::vector<ScoperRun> scopers;
  Environment environment;

  const ScoperRun* find(const std::string& name) const {
    for (const auto& s : scopers)
      if (s.scoper == name) return &s;
    return nullptr;
  }
};

inline const std::vector<std::string>& scoper_names() {
  static const std::vector<std::string> names{"online_unrestricted", "upper_bound", "max_speedup",
                                              "baseline",            "heuristic",   "random"};
  return names;
}

namespace experiment_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  const auto us = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
  return static_cast<double>(us) * 1e-6;
}

/// Scope application plus solve. Short solves are repeated and the fastest
/// repeat is kept, which filters out preemption by other work; the solver is
/// deterministic, so every repeat returns the same result.
inline ScoperRun solve_scoped(const std::string& name, const ScopedProblem& full, const ScopeDirective& d,
                              const RunConfig& rc) {
  ScoperRun r;
  r.scoper = name;
  r.directive = d;
  std::optional<SolveResult> res;
  double total = 0;
  for (int k = 0; k < std::max(1, rc.timing_repeats); ++k) {
    const auto t0 = Clock::now();
    const ScopedProblem p = apply_scope(full, d);
    auto once = solve(p, rc.budget);
    const double t = seconds_since(t0);
    r.time_s = k == 0 ? t : std::min(r.time_s, t);
    total += t;
    if (!res) {
      res = std::move(once);
      r.space_log10 = search_space_log10(p);
    }
    if (total >= rc.repeat_below_s) break;
  }
  r.status = res->status;
  r.solution = std::move(res->solution);
  r.stats = std::move(res->stats);
  r.flexible_trains = static_cast<int>(d.flexible_trains().size());
  return r;
}

inline ScoperRun failed(const std::string& name, const std::string& outcome, const std::string& reason) {
  ScoperRun r;
  r.scoper = name;
  r.outcome = outcome;
  r.reason = reason;
  return r;
}

/// Runs f, turning any exception into an "error" entry.
template <class F>
ScoperRun guarded(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return failed(name, "error", e.what());
  }
}

inline std::uint64_t random_seed(const ExperimentId& id, int k) {
  std::uint64_t h = 1469598103934665603ULL;
  for (long long v : {static_cast<long long>(id.infra_id), static_cast<long long>(id.schedule_id),
                      static_cast<long long>(id.malfunction_id), static_cast<long long>(id.run),
                      static_cast<long long>(k)}) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace experiment_detail

/// Solves the unrestricted problem first, then every offline scoper from its
/// solution, then the online scopers. A scoper that fails is recorded with
/// its reason; the experiment always completes.
inline ExperimentResult run_experiment(const Infrastructure& infra, const Schedule& schedule, const Malfunction& m,
                                       const AgendaConfig& config, const ExperimentId& id) {
  using namespace experiment_detail;
  ExperimentResult out;
  out.id = id;
  out.malfunction = m;
  out.vacuous = is_vacuous(m, schedule);
  out.trains = static_cast<int>(schedule.runs.size());
  out.environment = current_environment();
  const auto& rs = config.reschedule;
  const RunConfig& rc = config.runs;

  const auto t0 = Clock::now();
  const ScopedProblem full =
      build_full_problem(infra, schedule, m, {rs.weight_route_change, rs.weight_lateness_seconds},
                         rs.number_of_shortest_paths_per_train, rs.max_window_size_from_earliest);
  out.build_s = seconds_since(t0);

  // u and h below refer into scopers; no reallocation after this.
  out.scopers.reserve(scoper_names().size());
  out.scopers.push_back(guarded("online_unrestricted", [&] {
    return solve_scoped("online_unrestricted", full, scope_online_unrestricted(schedule, m), rc);
  }));
  const ScoperRun& u = out.scopers.front();
  const bool have_u = u.solved();
  const bool u_proven = have_u && u.stats.proven;

  std::optional<CoreProblem> core;
  if (have_u) {
    core = core_problem(schedule, u.solution->runs);
    out.core_trains = core->trains;
    out.core_nodes = static_cast<int>(core->nodes.size());
  }

  const std::string skip_reason =
      u.outcome != "solved" ? "unrestricted run failed: " + u.reason
                            : std::string("unrestricted run has no solution (") + status_name(u.status) + ")";
  auto offline = [&](const std::string& name, auto make) {
    if (!have_u) return failed(name, "skipped", skip_reason);
    return guarded(name, [&] { return solve_scoped(name, full, make(), rc); });
  };
  out.scopers.push_back(offline("upper_bound", [&] { return scope_upper_bound(*u.solution); }));
  out.scopers.push_back(offline("max_speedup", [&] { return scope_max_speedup(schedule, *u.solution); }));
  out.scopers.push_back(offline("baseline", [&] { return scope_baseline(schedule, *u.solution); }));

  out.scopers.push_back(
      guarded("heuristic", [&] { return solve_scoped("heuristic", full, scope_heuristic(schedule, m, infra), rc); }));
  const ScoperRun& h = out.scopers.back();
  const std::size_t n_random = h.directive ? h.directive->flexible_trains().size() : predicted_affected(schedule, m).size();

  ScoperRun random;
  random.scoper = "random";
  for (int k = 0; k < config.runs.random_seeds; ++k) {
    const auto seed = random_seed(id, k);
    auto s = guarded("random", [&] { return solve_scoped("random", full, scope_random(schedule, m, n_random, seed), rc); });
    s.seed = seed;
    random.samples.push_back(std::move(s));
  }

  // Metrics against the unrestricted run.
  auto score = [&](ScoperRun& r, bool online) {
    if (!have_u || r.outcome != "solved") return;
    r.speedup = speedup(u.time_s, r.time_s);
    if (r.solution) {
      r.additional_lateness = r.solution->cost - u.solution->cost;
      r.lateness_flagged = !(u_proven && r.stats.proven);
    } else {
      r.additional_lateness = config.runs.infeasible_penalty;
      r.lateness_flagged = r.status != SolveStatus::Infeasible || !u_proven;
    }
    if (online && r.directive) r.prediction = prediction_quality(r.directive->flexible_trains(), core->trains);
  };
  for (std::size_t i = 0; i < out.scopers.size(); ++i) score(out.scopers[i], out.scopers[i].scoper == "heuristic");
  for (auto& s : random.samples) score(s, true);

  // The random entry reports the means over its solved draws.
  std::vector<const ScoperRun*> ok;
  for (const auto& s : random.samples)
    if (s.outcome == "solved") ok.push_back(&s);
  if (ok.empty()) {
    random.outcome = random.samples.empty() ? "skipped" : random.samples.front().outcome;
    random.reason = random.samples.empty() ? "no random draws configured" : random.samples.front().reason;
  } else {
    const double k = static_cast<double>(ok.size());
    double t = 0, sp = 0, space = 0, al = 0, f1 = 0, flex = 0;
    bool any_solution = false, all_proven = true;
    for (const auto* s : ok) {
      t += s->time_s;
      sp += s->speedup;
      space += s->space_log10;
      al += static_cast<double>(s->additional_lateness);
      flex += s->flexible_trains;
      if (s->prediction) f1 += s->prediction->f1;
      any_solution = any_solution || s->solution.has_value();
      all_proven = all_proven && s->stats.proven;
      random.stats.nodes_expanded += s->stats.nodes_expanded;
      random.stats.branchings += s->stats.branchings;
      random.lateness_flagged = random.lateness_flagged || s->lateness_flagged;
    }
    random.time_s = t / k;
    random.speedup = have_u ? speedup(u.time_s, random.time_s) : 0;
    random.space_log10 = space / k;
    random.additional_lateness = static_cast<Cost>(std::llround(al / k));
    random.flexible_trains = static_cast<int>(std::lround(flex / k));
    random.stats.nodes_expanded /= ok.size();
    random.stats.branchings /= ok.size();
    random.stats.elapsed_s = random.time_s;
    random.stats.proven = all_proven;
    random.status = any_solution ? ok.front()->status : SolveStatus::Infeasible;
    if (have_u) {
      PredictionQuality q;
      q.f1 = f1 / k;
      random.prediction = q;
    }
  }
  out.scopers.push_back(std::move(random));
  return out;
}

inline void to_json(json& j, const PredictionQuality& q) {
  j = {{"true_positives", q.true_positives},
       {"false_positives", q.false_positives},
       {"false_negatives", q.false_negatives},
       {"f1", q.f1},
       {"vacuous", q.vacuous}};
}
inline void from_json(const json& j, PredictionQuality& q) {
  q.true_positives = j.at("true_positives");
  q.false_positives = j.at("false_positives");
  q.false_negatives = j.at("false_negatives");
  q.f1 = j.at("f1");
  q.vacuous = j.at("vacuous");
}

inline void to_json(json& j, const ScoperRun& r) {
  j = {{"scoper", r.scoper},
       {"outcome", r.outcome},
       {"time_s", r.time_s},
       {"flexible_trains", r.flexible_trains},
       {"space_log10", r.space_log10},
       {"speedup", r.speedup},
       {"additional_lateness", r.additional_lateness},
       {"lateness_flagged", r.lateness_flagged}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (r.outcome == "solved") {
    j["status"] = r.status;
    j["stats"] = r.stats;
  }
  if (r.directive) j["directive"] = directive_to_json(*r.directive);
  if (r.solution) j["solution"] = *r.solution;
  if (r.prediction) j["prediction"] = *r.prediction;
  if (r.seed) j["seed"] = *r.seed;
  if (!r.samples.empty()) j["samples"] = r.samples;
}
inline void from_json(const json& j, ScoperRun& r) {
  r = {};
  r.scoper = j.at("scoper");
  r.outcome = j.at("outcome");
  if (r.outcome != "solved" && r.outcome != "skipped" && r.outcome != "error")
    throw SchemaError("bad scoper outcome '" + r.outcome + "'");
  r.reason = j.value("reason", std::string{});
  r.time_s = j.at("time_s");
  r.flexible_trains = j.at("flexible_trains");
  r.space_log10 = j.at("space_log10");
  r.speedup = j.at("speedup");
  r.additional_lateness = j.at("additional_lateness");
  r.lateness_flagged = j.at("lateness_flagged");
  if (r.outcome == "solved") {
    r.status = j.at("status");
    r.stats = j.at("stats");
  }
  if (j.contains("directive")) r.directive = directive_from_json(j.at("directive"));
  if (j.contains("solution")) r.solution = j.at("solution").get<Solution>();
  if (j.contains("prediction")) r.prediction = j.at("prediction").get<PredictionQuality>();
  if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("samples")) r.samples = j.at("samples").get<std::vector<ScoperRun>>();
}

inline json result_to_json(const ExperimentResult& r) {
  return serialize_detail::document(
      "experiment_result",
      {{"id", {{"infra_id", r.id.infra_id}, {"schedule_id", r.id.schedule_id}, {"malfunction_id", r.id.malfunction_id},
               {"run", r.id.run}}},
       {"malfunction", r.malfunction},
       {"vacuous", r.vacuous},
       {"trains", r.trains},
       {"core_trains", r.core_trains},
       {"core_nodes", r.core_nodes},
       {"build_s", r.build_s},
       {"scopers", r.scopers},
       {"environment", {{"host", r.environment.host}, {"threads", r.environment.threads},
                        {"compiler", r.environment.compiler}}}});
}

inline ExperimentResult result_from_json(const json& j) {
  serialize_detail::expect(j, "experiment_result");
  ExperimentResult r;
  const auto& id = j.at("id");
  r.id = {id.at("infra_id"), id.at("schedule_id"), id.at("malfunction_id"), id.at("run")};
  r.malfunction = j.at("malfunction");
  r.vacuous = j.at("vacuous");
  r.trains = j.at("trains");
  r.core_trains = j.at("core_trains").get<std::vector<TrainId>>();
  r.core_nodes = j.at("core_nodes");
  r.build_s = j.at("build_s");
  r.scopers = j.at("scopers").get<std::vector<ScoperRun>>();
  const auto& e = j.at("environment");
  r.environment = {e.at("host"), e.at("threads"), e.at("compiler")};
  if (!r.find("online_unrestricted")) throw SchemaError("experiment result has no online_unrestricted entry");
  return r;
}

/// The result without wall-clock measurements and host details; two runs of
/// the same experiment agree on it.
inline json comparable_json(const ExperimentResult& r) {
  static const std::set<std::string> drop{"time_s", "speedup", "build_s", "elapsed_s", "environment"};
  std::function<void(json&)> strip = [&](json& j) {
    if (j.is_object()) {
      for (const auto& k : drop) j.erase(k);
      for (auto& e : j.items()) strip(e.value());
    } else if (j.is_array()) {
      for (auto& v : j) strip(v);
    }
  };
  json j = result_to_json(r);
  strip(j);
  return j;
}

}  // namespace corescope
