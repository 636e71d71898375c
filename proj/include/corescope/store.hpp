#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "corescope/experiment.hpp"
#include "corescope/pipeline.hpp"

namespace corescope {

namespace fs = std::filesystem;

/// CORESCOPE_STORE if set, else `fallback`.
inline fs::path store_root(const fs::path& fallback = "store") {
  if (const char* env = std::getenv("CORESCOPE_STORE"); env && *env) return env;
  return fallback;
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
inline void atomic_write(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  static std::atomic<unsigned long> counter{0};
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// File hierarchy:
///   infra/{i}/infrastructure.json
///   infra/{i}/schedule/{s}/schedule.json
///   infra/{i}/schedule/{s}/resched/{m}/malfunction.json
///   runs/{agenda_id}/agenda.json, runs/{agenda_id}/{i}_{s}_{m}_{r}.json
class Store {
 public:
  explicit Store(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  fs::path infra_file(int i) const { return infra_dir(i) / "infrastructure.json"; }
  fs::path schedule_file(int i, int s) const { return schedule_dir(i, s) / "schedule.json"; }
  fs::path malfunction_file(int i, int s, int m) const {
    return schedule_dir(i, s) / "resched" / std::to_string(m) / "malfunction.json";
  }
  fs::path runs_dir(const std::string& agenda_id) const { return root_ / "runs" / agenda_id; }
  fs::path result_file(const std::string& agenda_id, const ExperimentId& id) const {
    return runs_dir(agenda_id) / (id.str() + ".json");
  }

  /// A stored result that parses and validates, else nothing.
  std::optional<ExperimentResult> load_result(const std::string& agenda_id, const ExperimentId& id) const {
    const auto path = result_file(agenda_id, id);
    if (!fs::exists(path)) return std::nullopt;
    try {
      auto r = result_from_json(read_json_file(path.string()));
      if (r.id != id) return std::nullopt;
      return r;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  std::vector<ExperimentResult> load_results(const std::string& agenda_id) const {
    std::vector<ExperimentResult> out;
    const auto dir = runs_dir(agenda_id);
    if (!fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && e.path().extension() == ".json" && name != "agenda.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(result_from_json(read_json_file(f.string())));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
  }

 private:
  fs::path infra_dir(int i) const { return root_ / "infra" / std::to_string(i); }
  fs::path schedule_dir(int i, int s) const { return infra_dir(i) / "schedule" / std::to_string(s); }

  fs::path root_;
};

/// Loads the stored infrastructure when it matches the spec, else generates
/// and stores it.
inline Infrastructure ensure_infrastructure(const Store& store, const InfraSpec& spec) {
  const auto path = store.infra_file(spec.infra_id);
  if (fs::exists(path)) {
    try {
      auto inf = infrastructure_from_json(read_json_file(path.string()));
      if (inf.params == spec.params && inf.seed == spec.seed) return inf;
    } catch (const std::exception&) {
    }
  }
  auto inf = generate_infrastructure(spec.params, spec.seed);
  inf.infra_id = std::to_string(spec.infra_id);
  atomic_write(path, infrastructure_to_json(inf).dump(1));
  return inf;
}

inline Schedule ensure_schedule(const Store& store, const ScheduleSpec& spec, const Infrastructure& infra) {
  const auto path = store.schedule_file(spec.infra_id, spec.schedule_id);
  if (fs::exists(path)) {
    try {
      auto s = schedule_from_json(read_json_file(path.string()));
      if (s.seed == spec.seed && s.infra_id == infra.infra_id) return s;
    } catch (const std::exception&) {
    }
  }
  auto s = generate_schedule(infra, spec.seed, spec.params);
  s.schedule_id = std::to_string(spec.schedule_id);
  s.infra_id = infra.infra_id;
  atomic_write(path, schedule_to_json(s).dump(1));
  return s;
}

struct AgendaProgress {
  std::string event;  // "generated", "done", "resumed", "failed"
  std::string id;
  std::size_t finished = 0;
  std::size_t total = 0;
  std::string message;
};

inline std::string progress_line(const AgendaProgress& p) {
  json j = {{"event", p.event}, {"id", p.id}, {"finished", p.finished}, {"total", p.total}};
  if (!p.message.empty()) j["message"] = p.message;
  return j.dump();
}

struct AgendaSummary {
  std::size_t total = 0;
  std::size_t done = 0;
  std::size_t resumed = 0;
  /// Not started because a stop was requested.
  std::size_t cancelled = 0;
  std::vector<std::pair<std::string, std::string>> failed;  // id, reason
};

namespace store_detail {

/// Runs job(i) for i in [0, n) on `workers` threads; workers <= 1 runs in order
/// on the calling thread.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < k; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace store_detail

/// Generates missing inputs, then runs every experiment without a valid
/// stored result. A result is written atomically only once complete, so an
/// interrupted agenda resumes where it stopped. Failures are reported and
/// the agenda continues. Setting `stop` lets running experiments finish and
/// starts no new ones.
inline AgendaSummary run_agenda(const Agenda& agenda, const Store& store, int workers,
                                const std::function<void(const AgendaProgress&)>& progress = {},
                                const std::atomic<bool>* stop = nullptr) {
  const std::string& aid = agenda.config.agenda_id;
  atomic_write(store.runs_dir(aid) / "agenda.json", agenda_config_to_json(agenda.config).dump(1) + "\n");

  std::mutex mu;
  AgendaSummary summary;
  summary.total = agenda.experiments.size();
  auto report = [&](AgendaProgress p) {
    if (!progress) return;
    p.total = summary.total;
    p.finished = summary.done + summary.resumed + summary.failed.size();
    progress(p);
  };

  // Level 0 and 1: infrastructures and their schedules.
  std::vector<std::optional<Infrastructure>> infras(agenda.infras.size());
  std::vector<std::string> infra_error(agenda.infras.size());
  store_detail::parallel_for(agenda.infras.size(), workers, [&](std::size_t i) {
    try {
      infras[i] = ensure_infrastructure(store, agenda.infras[i]);
    } catch (const std::exception& e) {
      infra_error[i] = e.what();
    }
  });
  std::map<std::pair<int, int>, std::size_t> schedule_index;
  for (std::size_t k = 0; k < agenda.schedules.size(); ++k)
    schedule_index[{agenda.schedules[k].infra_id, agenda.schedules[k].schedule_id}] = k;
  std::vector<std::optional<Schedule>> schedules(agenda.schedules.size());
  std::vector<std::string> schedule_error(agenda.schedules.size());
  store_detail::parallel_for(agenda.schedules.size(), workers, [&](std::size_t k) {
    const auto& spec = agenda.schedules[k];
    const auto i = static_cast<std::size_t>(spec.infra_id);
    if (!infras[i]) {
      schedule_error[k] = "infrastructure failed: " + infra_error[i];
      return;
    }
    try {
      schedules[k] = ensure_schedule(store, spec, *infras[i]);
    } catch (const std::exception& e) {
      schedule_error[k] = e.what();
    }
  });

  // Levels 2 and 3: one experiment per malfunction and run.
  store_detail::parallel_for(agenda.experiments.size(), workers, [&](std::size_t x) {
    const auto& ex = agenda.experiments[x];
    const std::string id = ex.id.str();
    if (stop && stop->load()) {
      std::lock_guard lock(mu);
      ++summary.cancelled;
      return;
    }
    if (store.load_result(aid, ex.id)) {
      std::lock_guard lock(mu);
      ++summary.resumed;
      report({"resumed", id, 0, 0, {}});
      return;
    }
    const std::size_t k = schedule_index.at({ex.id.infra_id, ex.id.schedule_id});
    std::string error;
    try {
      if (!schedules[k]) throw Error("schedule failed: " + schedule_error[k]);
      const auto& sched = *schedules[k];
      const auto m = malfunction_for(sched, ex.malfunction_train, ex.earliest_malfunction, ex.malfunction_duration);
      const auto mpath = store.malfunction_file(ex.id.infra_id, ex.id.schedule_id, ex.id.malfunction_id);
      if (!fs::exists(mpath)) atomic_write(mpath, malfunction_to_json(m).dump(1));
      const auto result = run_experiment(*infras[static_cast<std::size_t>(ex.id.infra_id)], sched, m, agenda.config, ex.id);
      atomic_write(store.result_file(aid, ex.id), result_to_json(result).dump());
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(mu);
    if (error.empty()) {
      ++summary.done;
      report({"done", id, 0, 0, {}});
    } else {
      summary.failed.push_back({id, error});
      report({"failed", id, 0, 0, error});
    }
  });
  std::sort(summary.failed.begin(), summary.failed.end());
  return summary;
}

}  // namespace corescope
