#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "corescope/experiment.hpp"

namespace corescope {

struct AnalysisOptions {
  int bins = 10;
  /// Filter on the unrestricted solve time; when both are given they also
  /// fix the binning range, otherwise the observed range is used.
  std::optional<double> min_time;
  std::optional<double> max_time;
};

struct Quantiles {
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

/// Linearly interpolated quantiles; all zero for an empty sample.
inline Quantiles quantiles(std::vector<double> xs) {
  Quantiles q;
  q.n = xs.size();
  if (xs.empty()) return q;
  std::sort(xs.begin(), xs.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - static_cast<double>(lo));
  };
  q.min = xs.front();
  q.max = xs.back();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  double sum = 0;
  for (double x : xs) sum += x;
  q.mean = sum / static_cast<double>(xs.size());
  return q;
}

/// One scoper in one difficulty bin; bin -1 pools all bins.
struct BinStats {
  int bin = -1;
  double lo = 0, hi = 0;
  std::string scoper;
  std::size_t runs = 0;
  std::size_t solved = 0;
  Quantiles speedup;
  Quantiles additional_lateness;
  Quantiles nodes;
  Quantiles time_s;
};

struct PredictionSummary {
  std::string scoper;
  /// Scored predictions; for random, every draw counts.
  std::size_t n = 0;
  double mean_false_positives = 0;
  double mean_false_negatives = 0;
  double mean_f1 = 0;
  /// Share of predictions that miss at least one core train.
  double false_negative_rate = 0;
};

/// One row of the flat metrics table.
struct MetricRow {
  std::string experiment;
  ExperimentId id;
  int trains = 0;
  int core_trains = 0;
  bool vacuous = false;
  std::string scoper;
  std::string outcome;
  std::string status;
  bool proven = false;
  double time_s = 0;
  double unrestricted_time_s = 0;
  double speedup = 0;
  long long nodes = 0;
  long long branchings = 0;
  int flexible_trains = 0;
  double space_log10 = 0;
  std::optional<Cost> cost;
  Cost additional_lateness = 0;
  bool lateness_flagged = false;
  std::optional<double> false_positives;
  std::optional<double> false_negatives;
  std::optional<double> f1;
  /// Difficulty bin, or nothing when the experiment is filtered out.
  std::optional<int> bin;
  std::string reason;
};

struct AnalysisReport {
  AnalysisOptions options;
  double lo = 0, hi = 0;
  int bins = 1;
  std::size_t loaded = 0;
  std::size_t kept = 0;
  std::vector<std::size_t> histogram;
  std::vector<BinStats> per_bin;
  std::vector<PredictionSummary> prediction;
  std::vector<MetricRow> rows;
  std::vector<std::string> warnings;

  const BinStats* stats(const std::string& scoper, int bin) const {
    for (const auto& b : per_bin)
      if (b.scoper == scoper && b.bin == bin) return &b;
    return nullptr;
  }
  /// Highest bin holding at least one experiment, or -1.
  int hardest_bin() const {
    for (int b = static_cast<int>(histogram.size()) - 1; b >= 0; --b)
      if (histogram[static_cast<std::size_t>(b)] > 0) return b;
    return -1;
  }
};

namespace analysis_detail {

inline void add_prediction(PredictionSummary& s, const PredictionQuality& q) {
  ++s.n;
  s.mean_false_positives += q.false_positives;
  s.mean_false_negatives += q.false_negatives;
  s.mean_f1 += q.f1;
  if (q.false_negatives > 0) s.false_negative_rate += 1;
}

inline MetricRow row_of(const ExperimentResult& r, const ScoperRun& s, double u_time) {
  MetricRow m;
  m.experiment = r.id.str();
  m.id = r.id;
  m.trains = r.trains;
  m.core_trains = static_cast<int>(r.core_trains.size());
  m.vacuous = r.vacuous;
  m.scoper = s.scoper;
  m.outcome = s.outcome;
  m.reason = s.reason;
  if (s.outcome == "solved") {
    m.status = status_name(s.status);
    m.proven = s.stats.proven;
    m.time_s = s.time_s;
    m.unrestricted_time_s = u_time;
    m.speedup = s.speedup;
    m.nodes = static_cast<long long>(s.stats.nodes_expanded);
    m.branchings = static_cast<long long>(s.stats.branchings);
    m.flexible_trains = s.flexible_trains;
    m.space_log10 = s.space_log10;
    if (s.solution) m.cost = s.solution->cost;
    m.additional_lateness = s.additional_lateness;
    m.lateness_flagged = s.lateness_flagged;
  }
  if (!s.samples.empty()) {
    PredictionSummary p;
    for (const auto& d : s.samples)
      if (d.prediction) add_prediction(p, *d.prediction);
    if (p.n > 0) {
      const double n = static_cast<double>(p.n);
      m.false_positives = p.mean_false_positives / n;
      m.false_negatives = p.mean_false_negatives / n;
      m.f1 = p.mean_f1 / n;
    }
  } else if (s.prediction) {
    m.false_positives = s.prediction->false_positives;
    m.false_negatives = s.prediction->false_negatives;
    m.f1 = s.prediction->f1;
  }
  return m;
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace analysis_detail

/// Bins experiments by unrestricted solve time and summarises every scoper.
/// Only experiments whose unrestricted run solved within the time filter are
/// binned; all of them still appear in the flat rows.
inline AnalysisReport analyze(const std::vector<ExperimentResult>& results, const AnalysisOptions& options = {}) {
  using namespace analysis_detail;
  if (options.bins < 1) throw InvalidRange("bins must be positive");
  if (options.min_time && options.max_time && *options.max_time < *options.min_time)
    throw InvalidRange("max time below min time");
  AnalysisReport rep;
  rep.options = options;
  rep.loaded = results.size();

  std::vector<const ExperimentResult*> kept;
  for (const auto& r : results) {
    const ScoperRun* u = r.find("online_unrestricted");
    if (!u || !u->solved()) continue;
    if (options.min_time && u->time_s < *options.min_time) continue;
    if (options.max_time && u->time_s > *options.max_time) continue;
    kept.push_back(&r);
  }
  rep.kept = kept.size();
  if (kept.empty()) {
    rep.warnings.push_back(results.empty() ? "EmptyAfterFilter: no results" :
                                             "EmptyAfterFilter: no result has a solved unrestricted run in the time filter");
  }

  auto u_time = [](const ExperimentResult& r) { return r.find("online_unrestricted")->time_s; };
  if (options.min_time && options.max_time && *options.max_time > *options.min_time) {
    rep.lo = *options.min_time;
    rep.hi = *options.max_time;
  } else if (!kept.empty()) {
    rep.lo = rep.hi = u_time(*kept.front());
    for (const auto* r : kept) {
      rep.lo = std::min(rep.lo, u_time(*r));
      rep.hi = std::max(rep.hi, u_time(*r));
    }
  }
  rep.bins = rep.hi > rep.lo ? options.bins : 1;
  rep.histogram.assign(static_cast<std::size_t>(rep.bins), 0);
  auto bin_of = [&](const ExperimentResult& r) {
    return rep.bins == 1 ? 0 : difficulty_bin(u_time(r), rep.lo, rep.hi, rep.bins);
  };

  std::map<const ExperimentResult*, int> bin;
  for (const auto* r : kept) {
    bin[r] = bin_of(*r);
    ++rep.histogram[static_cast<std::size_t>(bin[r])];
  }

  for (const auto& r : results) {
    const ScoperRun* u = r.find("online_unrestricted");
    const double ut = u && u->solved() ? u->time_s : 0;
    for (const auto& s : r.scopers) {
      auto row = row_of(r, s, ut);
      if (auto it = bin.find(&r); it != bin.end()) row.bin = it->second;
      rep.rows.push_back(std::move(row));
    }
  }

  const double width = (rep.hi - rep.lo) / rep.bins;
  for (const auto& name : scoper_names()) {
    for (int b = -1; b < rep.bins; ++b) {
      BinStats st;
      st.bin = b;
      st.scoper = name;
      st.lo = b < 0 ? rep.lo : rep.lo + width * b;
      st.hi = b < 0 ? rep.hi : (b + 1 == rep.bins ? rep.hi : rep.lo + width * (b + 1));
      std::vector<double> sp, al, nodes, t;
      for (const auto* r : kept) {
        if (b >= 0 && bin[r] != b) continue;
        const ScoperRun* s = r->find(name);
        if (!s) continue;
        ++st.runs;
        if (s->outcome != "solved") continue;
        ++st.solved;
        sp.push_back(s->speedup);
        al.push_back(static_cast<double>(s->additional_lateness));
        nodes.push_back(static_cast<double>(s->stats.nodes_expanded));
        t.push_back(s->time_s);
      }
      st.speedup = quantiles(std::move(sp));
      st.additional_lateness = quantiles(std::move(al));
      st.nodes = quantiles(std::move(nodes));
      st.time_s = quantiles(std::move(t));
      rep.per_bin.push_back(std::move(st));
    }
  }

  for (const std::string name : {"heuristic", "random"}) {
    PredictionSummary p;
    p.scoper = name;
    for (const auto* r : kept) {
      const ScoperRun* s = r->find(name);
      if (!s) continue;
      if (!s->samples.empty()) {
        for (const auto& d : s->samples)
          if (d.prediction) add_prediction(p, *d.prediction);
      } else if (s->prediction) {
        add_prediction(p, *s->prediction);
      }
    }
    if (p.n > 0) {
      const double n = static_cast<double>(p.n);
      p.mean_false_positives /= n;
      p.mean_false_negatives /= n;
      p.mean_f1 /= n;
      p.false_negative_rate /= n;
    }
    rep.prediction.push_back(p);
  }
  return rep;
}

/// Flat table, one row per scoper per experiment. Columns:
///   experiment, infra_id, schedule_id, malfunction_id, run: composite id
///   trains, core_trains, vacuous: instance facts
///   scoper, outcome (solved/skipped/error), status, proven
///   time_s: scope application plus solve; unrestricted_time_s; speedup
///   nodes, branchings: search effort
///   flexible_trains, space_log10: size of the scoped problem
///   cost, additional_lateness, lateness_flagged (1 when either cost is unproven)
///   false_positives, false_negatives, f1: online scopers, random as draw means
///   bin: difficulty bin, empty when filtered out
///   reason: why a run was skipped or failed
inline std::string metrics_csv(const AnalysisReport& rep) {
  using analysis_detail::csv_field;
  using analysis_detail::fmt;
  std::ostringstream out;
  out << "experiment,infra_id,schedule_id,malfunction_id,run,trains,core_trains,vacuous,scoper,outcome,status,proven,"
         "time_s,unrestricted_time_s,speedup,nodes,branchings,flexible_trains,space_log10,cost,additional_lateness,"
         "lateness_flagged,false_positives,false_negatives,f1,bin,reason\n";
  auto opt = [](const std::optional<double>& x) { return x ? fmt(*x) : std::string(); };
  for (const auto& r : rep.rows) {
    out << r.experiment << ',' << r.id.infra_id << ',' << r.id.schedule_id << ',' << r.id.malfunction_id << ','
        << r.id.run << ',' << r.trains << ',' << r.core_trains << ',' << (r.vacuous ? 1 : 0) << ',' << r.scoper << ','
        << r.outcome << ',' << r.status << ',' << (r.proven ? 1 : 0) << ',' << fmt(r.time_s) << ','
        << fmt(r.unrestricted_time_s) << ',' << fmt(r.speedup) << ',' << r.nodes << ',' << r.branchings << ','
        << r.flexible_trains << ',' << fmt(r.space_log10) << ',' << (r.cost ? std::to_string(*r.cost) : "") << ','
        << r.additional_lateness << ',' << (r.lateness_flagged ? 1 : 0) << ',' << opt(r.false_positives) << ','
        << opt(r.false_negatives) << ',' << opt(r.f1) << ',' << (r.bin ? std::to_string(*r.bin) : "") << ','
        << csv_field(r.reason) << '\n';
  }
  return out.str();
}

/// Per-bin, per-scoper distributions; bin "all" pools the bins.
inline std::string bins_csv(const AnalysisReport& rep) {
  using analysis_detail::fmt;
  std::ostringstream out;
  out << "bin,lo_s,hi_s,experiments,scoper,runs,solved";
  for (const char* m : {"speedup", "additional_lateness", "nodes", "time_s"})
    for (const char* q : {"min", "q1", "median", "q3", "max", "mean"}) out << ',' << m << '_' << q;
  out << '\n';
  for (const auto& b : rep.per_bin) {
    const std::size_t experiments = b.bin < 0 ? rep.kept : rep.histogram[static_cast<std::size_t>(b.bin)];
    out << (b.bin < 0 ? std::string("all") : std::to_string(b.bin)) << ',' << fmt(b.lo) << ',' << fmt(b.hi) << ','
        << experiments << ',' << b.scoper << ',' << b.runs << ',' << b.solved;
    for (const Quantiles* q : {&b.speedup, &b.additional_lateness, &b.nodes, &b.time_s})
      for (double v : {q->min, q->q1, q->median, q->q3, q->max, q->mean}) out << ',' << fmt(v);
    out << '\n';
  }
  return out.str();
}

inline std::string histogram_csv(const AnalysisReport& rep) {
  using analysis_detail::fmt;
  std::ostringstream out;
  out << "bin,lo_s,hi_s,experiments\n";
  const double width = (rep.hi - rep.lo) / rep.bins;
  for (int b = 0; b < rep.bins; ++b)
    out << b << ',' << fmt(rep.lo + width * b) << ',' << fmt(b + 1 == rep.bins ? rep.hi : rep.lo + width * (b + 1))
        << ',' << rep.histogram[static_cast<std::size_t>(b)] << '\n';
  return out.str();
}

inline std::string prediction_csv(const AnalysisReport& rep) {
  using analysis_detail::fmt;
  std::ostringstream out;
  out << "scoper,predictions,mean_false_positives,mean_false_negatives,mean_f1,false_negative_rate\n";
  for (const auto& p : rep.prediction)
    out << p.scoper << ',' << p.n << ',' << fmt(p.mean_false_positives) << ',' << fmt(p.mean_false_negatives) << ','
        << fmt(p.mean_f1) << ',' << fmt(p.false_negative_rate) << '\n';
  return out.str();
}

}  // namespace corescope
