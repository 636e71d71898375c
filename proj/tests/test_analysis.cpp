#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "corescope/analysis.hpp"
#include "corescope/plots.hpp"

using namespace corescope;

namespace {

ScoperRun solved(const std::string& name, double time_s, double speedup, std::uint64_t nodes, Cost extra = 0) {
  ScoperRun s;
  s.scoper = name;
  s.status = SolveStatus::Optimal;
  s.solution = Solution{};
  s.time_s = time_s;
  s.speedup = speedup;
  s.stats.nodes_expanded = nodes;
  s.stats.proven = true;
  s.additional_lateness = extra;
  return s;
}

/// Unrestricted time u; baseline twice as fast; heuristic with the given prediction.
ExperimentResult result(int m, double u, PredictionQuality heuristic) {
  ExperimentResult r;
  r.id = {0, 0, m, 0};
  r.trains = 10;
  r.scopers.push_back(solved("online_unrestricted", u, 1, 100));
  r.scopers.push_back(solved("baseline", u / 2, 2, 50));
  auto h = solved("heuristic", u / 4, 4, 20, 3);
  h.prediction = heuristic;
  r.scopers.push_back(h);
  return r;
}

PredictionQuality pq(int tp, int fp, int fn) {
  PredictionQuality q;
  q.true_positives = tp;
  q.false_positives = fp;
  q.false_negatives = fn;
  q.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
  return q;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Quantiles, LinearInterpolation) {
  const auto q = quantiles({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(q.min, 1);
  EXPECT_DOUBLE_EQ(q.q1, 1.75);
  EXPECT_DOUBLE_EQ(q.median, 2.5);
  EXPECT_DOUBLE_EQ(q.q3, 3.25);
  EXPECT_DOUBLE_EQ(q.max, 4);
  EXPECT_DOUBLE_EQ(q.mean, 2.5);
  EXPECT_EQ(quantiles({}).n, 0u);
}

TEST(Analyze, BinsSpanTheObservedRange) {
  std::vector<ExperimentResult> rs;
  // Unrestricted times 1, 2, ..., 10 seconds.
  for (int i = 0; i < 10; ++i) rs.push_back(result(i, i + 1.0, pq(1, 0, 0)));
  const auto rep = analyze(rs, {3, {}, {}});
  EXPECT_DOUBLE_EQ(rep.lo, 1);
  EXPECT_DOUBLE_EQ(rep.hi, 10);
  ASSERT_EQ(rep.bins, 3);
  // Edges at 4 and 7; a value on an edge goes to the upper bin.
  EXPECT_EQ(rep.histogram, (std::vector<std::size_t>{3, 3, 4}));
  EXPECT_EQ(rep.hardest_bin(), 2);
  const auto* b = rep.stats("baseline", 2);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->runs, 4u);
  EXPECT_DOUBLE_EQ(b->speedup.median, 2);
  EXPECT_DOUBLE_EQ(b->time_s.median, 4.25);
  EXPECT_DOUBLE_EQ(rep.stats("heuristic", -1)->additional_lateness.mean, 3);
  // Scopers absent from every result have empty statistics.
  EXPECT_EQ(rep.stats("random", -1)->runs, 0u);
  EXPECT_EQ(rep.rows.size(), 30u);
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(Analyze, FixedRangeFiltersAndBins) {
  std::vector<ExperimentResult> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(result(i, i + 1.0, pq(1, 0, 0)));
  const auto rep = analyze(rs, {2, 2.0, 6.0});
  EXPECT_EQ(rep.kept, 5u);
  EXPECT_EQ(rep.histogram, (std::vector<std::size_t>{2, 3}));
  // Filtered experiments still appear in the table, without a bin.
  EXPECT_EQ(rep.rows.size(), 30u);
  EXPECT_FALSE(rep.rows.front().bin);
}

TEST(Analyze, SingleResultIsOneBin) {
  const auto rep = analyze({result(0, 5, pq(1, 0, 0))});
  EXPECT_EQ(rep.bins, 1);
  EXPECT_EQ(rep.histogram, (std::vector<std::size_t>{1}));
  EXPECT_EQ(rep.hardest_bin(), 0);
}

TEST(Analyze, EmptyAfterFilterWarns) {
  const auto rep = analyze({result(0, 5, pq(1, 0, 0))}, {10, 10.0, 20.0});
  EXPECT_EQ(rep.kept, 0u);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_EQ(rep.warnings[0].rfind("EmptyAfterFilter", 0), 0u);
  EXPECT_EQ(rep.hardest_bin(), -1);
  EXPECT_FALSE(analyze({}).warnings.empty());
}

TEST(Analyze, BadOptionsThrow) {
  EXPECT_THROW(analyze({}, {0, {}, {}}), InvalidRange);
  EXPECT_THROW(analyze({}, {10, 5.0, 1.0}), InvalidRange);
}

TEST(Analyze, PredictionSummary) {
  const auto rep = analyze({result(0, 1, pq(2, 0, 0)), result(1, 2, pq(1, 1, 1))});
  const auto& h = rep.prediction.front();
  EXPECT_EQ(h.scoper, "heuristic");
  EXPECT_EQ(h.n, 2u);
  EXPECT_DOUBLE_EQ(h.mean_false_negatives, 0.5);
  EXPECT_DOUBLE_EQ(h.false_negative_rate, 0.5);
  EXPECT_DOUBLE_EQ(h.mean_f1, (1.0 + 0.5) / 2);
}

TEST(Report, CsvHeadersAndFiles) {
  std::vector<ExperimentResult> rs;
  for (int i = 0; i < 4; ++i) rs.push_back(result(i, i + 1.0, pq(1, 0, 0)));
  const auto rep = analyze(rs, {2, {}, {}});
  EXPECT_EQ(first_line(metrics_csv(rep)),
            "experiment,infra_id,schedule_id,malfunction_id,run,trains,core_trains,vacuous,scoper,outcome,status,"
            "proven,time_s,unrestricted_time_s,speedup,nodes,branchings,flexible_trains,space_log10,cost,"
            "additional_lateness,lateness_flagged,false_positives,false_negatives,f1,bin,reason");
  EXPECT_EQ(first_line(histogram_csv(rep)), "bin,lo_s,hi_s,experiments");
  EXPECT_EQ(first_line(prediction_csv(rep)),
            "scoper,predictions,mean_false_positives,mean_false_negatives,mean_f1,false_negative_rate");
  EXPECT_EQ(first_line(bins_csv(rep)).rfind("bin,lo_s,hi_s,experiments,scoper,runs,solved,speedup_min", 0), 0u);

  const auto dir = fs::temp_directory_path() / "corescope_test_report";
  fs::remove_all(dir);
  write_report(rep, dir);
  for (const char* f : {"metrics.csv", "bins.csv", "histogram.csv", "prediction.csv", "speedup.svg", "lateness.svg",
                        "nodes.svg", "histogram.svg", "prediction.svg"}) {
    ASSERT_TRUE(fs::exists(dir / f)) << f;
    EXPECT_GT(fs::file_size(dir / f), 0u) << f;
  }
  std::ifstream in(dir / "speedup.svg");
  std::stringstream svg;
  svg << in.rdbuf();
  EXPECT_EQ(svg.str().rfind("<svg", 0), 0u);
  fs::remove_all(dir);
}
