#pragma once

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "corescope/analysis.hpp"
#include "corescope/store.hpp"

namespace corescope {

namespace svg_detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(double w, double h) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
         << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1) {
    out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
         << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none") {
    out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(w, 0.0)) << "\" height=\""
         << num(std::max(h, 0.0)) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    out_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
         << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width) {
    out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
         << "\" stroke-opacity=\"0.8\" points=\"";
    for (const auto& [x, y] : pts) out_ << num(x) << ',' << num(y) << ' ';
    out_ << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "start", double rotate = 0) {
    out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << '"';
    if (rotate != 0) out_ << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
    out_ << '>' << escape(s) << "</text>\n";
  }
  std::string str() const { return out_.str() + "</svg>\n"; }

 private:
  std::ostringstream out_;
};

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p{"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                          "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};
  return p;
}

/// Maps a value range onto pixel rows, optionally on a log10 scale.
struct Axis {
  double lo, hi;
  double top, bottom;
  bool log;
  double operator()(double v) const {
    auto t = [&](double x) { return log ? std::log10(std::max(x, 1e-9)) : x; };
    const double a = t(lo), b = t(hi);
    const double f = b > a ? (t(v) - a) / (b - a) : 0.5;
    return bottom - std::clamp(f, 0.0, 1.0) * (bottom - top);
  }
};

inline std::vector<double> ticks(const Axis& ax) {
  std::vector<double> out;
  if (ax.log) {
    for (int e = static_cast<int>(std::floor(std::log10(std::max(ax.lo, 1e-9))));
         e <= static_cast<int>(std::ceil(std::log10(std::max(ax.hi, 1e-9)))); ++e)
      out.push_back(std::pow(10.0, e));
    return out;
  }
  for (int i = 0; i <= 4; ++i) out.push_back(ax.lo + (ax.hi - ax.lo) * i / 4);
  return out;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace svg_detail

/// Grouped box plots: one group per difficulty bin, one box per scoper.
/// `pick` selects the distribution from a bin's statistics.
template <class Pick>
std::string box_plot_svg(const AnalysisReport& rep, const std::string& title, const std::string& y_label,
                         const std::vector<std::string>& scopers, Pick pick, bool log_y) {
  using namespace svg_detail;
  const double left = 70, right = 170, top = 40, bottom = 70, plot_h = 320;
  const double group_w = std::max(60.0, 14.0 * static_cast<double>(scopers.size()) + 16);
  const double w = left + right + group_w * rep.bins, h = top + plot_h + bottom;
  Canvas c(w, h);
  c.text(w / 2, 22, title, "middle");

  double lo = 0, hi = 0;
  bool any = false;
  for (const auto& b : rep.per_bin) {
    if (b.bin < 0) continue;
    const Quantiles& q = pick(b);
    if (q.n == 0) continue;
    lo = any ? std::min(lo, q.min) : q.min;
    hi = any ? std::max(hi, q.max) : q.max;
    any = true;
  }
  if (log_y) {
    lo = std::pow(10.0, std::floor(std::log10(std::max(lo, 1e-3))));
    hi = std::pow(10.0, std::ceil(std::log10(std::max(hi, lo * 10))));
  } else {
    lo = std::min(lo, 0.0);
    if (hi <= lo) hi = lo + 1;
  }
  const Axis ax{lo, hi, top, top + plot_h, log_y};
  for (double t : ticks(ax)) {
    c.line(left - 4, ax(t), w - right, ax(t), "#dddddd");
    c.text(left - 8, ax(t) + 4, fmt_tick(t), "end");
  }
  c.line(left, top, left, top + plot_h, "black");
  c.line(left, top + plot_h, w - right, top + plot_h, "black");
  c.text(18, top + plot_h / 2, y_label, "middle", -90);
  c.text(left + group_w * rep.bins / 2, h - 18, "difficulty bin (unrestricted solve time, s, lower edge)", "middle");

  for (int b = 0; b < rep.bins; ++b) {
    const double gx = left + group_w * b;
    const BinStats* first = rep.stats(scopers.front(), b);
    if (first)
      c.text(gx + group_w / 2, top + plot_h + 16,
             fmt_tick(first->lo), "middle");
    c.text(gx + group_w / 2, top + plot_h + 30, "n=" + std::to_string(rep.histogram[static_cast<std::size_t>(b)]),
           "middle");
    for (std::size_t s = 0; s < scopers.size(); ++s) {
      const BinStats* st = rep.stats(scopers[s], b);
      if (!st) continue;
      const Quantiles& q = pick(*st);
      if (q.n == 0) continue;
      const std::string& col = palette()[s % palette().size()];
      const double x = gx + 8 + 14.0 * static_cast<double>(s), bw = 10;
      c.line(x + bw / 2, ax(q.min), x + bw / 2, ax(q.max), col);
      c.rect(x, ax(q.q3), bw, ax(q.q1) - ax(q.q3), col, col);
      c.line(x, ax(q.median), x + bw, ax(q.median), "black", 2);
    }
  }
  for (std::size_t s = 0; s < scopers.size(); ++s) {
    const double y = top + 14 + 18.0 * static_cast<double>(s);
    c.rect(w - right + 14, y - 9, 10, 10, palette()[s % palette().size()]);
    c.text(w - right + 30, y, scopers[s]);
  }
  return c.str();
}

inline std::string histogram_svg(const AnalysisReport& rep) {
  using namespace svg_detail;
  const double left = 60, top = 40, plot_h = 260, bar_w = 48, bottom = 70;
  const double w = left + 30 + bar_w * rep.bins, h = top + plot_h + bottom;
  Canvas c(w, h);
  c.text(w / 2, 22, "Experiments per difficulty bin", "middle");
  std::size_t peak = 1;
  for (auto n : rep.histogram) peak = std::max(peak, n);
  const Axis ax{0, static_cast<double>(peak), top, top + plot_h, false};
  for (double t : ticks(ax)) {
    c.line(left - 4, ax(t), w - 30, ax(t), "#dddddd");
    c.text(left - 8, ax(t) + 4, fmt_tick(t), "end");
  }
  const double width = (rep.hi - rep.lo) / rep.bins;
  for (int b = 0; b < rep.bins; ++b) {
    const double n = static_cast<double>(rep.histogram[static_cast<std::size_t>(b)]);
    const double x = left + bar_w * b;
    c.rect(x + 4, ax(n), bar_w - 8, ax(0) - ax(n), palette()[0]);
    c.text(x + bar_w / 2, top + plot_h + 16, fmt_tick(rep.lo + width * b), "middle");
  }
  c.line(left, top + plot_h, w - 30, top + plot_h, "black");
  c.text(left + bar_w * rep.bins / 2, h - 22, "unrestricted solve time, s (bin lower edge)", "middle");
  c.text(16, top + plot_h / 2, "experiments", "middle", -90);
  return c.str();
}

inline std::string prediction_svg(const AnalysisReport& rep) {
  using namespace svg_detail;
  const double left = 60, top = 40, plot_h = 240, group_w = 150, bottom = 60;
  const double w = left + 180 + group_w * static_cast<double>(rep.prediction.size()), h = top + plot_h + bottom;
  Canvas c(w, h);
  c.text(w / 2, 22, "Prediction quality of online scopers", "middle");
  double peak = 1;
  for (const auto& p : rep.prediction)
    peak = std::max({peak, p.mean_false_positives, p.mean_false_negatives});
  const Axis ax{0, std::ceil(peak), top, top + plot_h, false};
  for (double t : ticks(ax)) {
    c.line(left - 4, ax(t), w - 180, ax(t), "#dddddd");
    c.text(left - 8, ax(t) + 4, fmt_tick(t), "end");
  }
  const std::vector<std::string> names{"mean false positives", "mean false negatives", "mean F1",
                                       "false-negative rate"};
  for (std::size_t g = 0; g < rep.prediction.size(); ++g) {
    const auto& p = rep.prediction[g];
    const double gx = left + group_w * static_cast<double>(g);
    const double vals[] = {p.mean_false_positives, p.mean_false_negatives, p.mean_f1, p.false_negative_rate};
    for (int k = 0; k < 4; ++k) {
      const double x = gx + 14 + 30.0 * k;
      c.rect(x, ax(vals[k]), 24, ax(0) - ax(vals[k]), palette()[static_cast<std::size_t>(k)]);
      c.text(x + 12, ax(vals[k]) - 4, fmt_tick(vals[k]), "middle");
    }
    c.text(gx + 74, top + plot_h + 18, p.scoper + " (n=" + std::to_string(p.n) + ")", "middle");
  }
  c.line(left, top + plot_h, w - 180, top + plot_h, "black");
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double y = top + 14 + 18.0 * static_cast<double>(k);
    c.rect(w - 170, y - 9, 10, 10, palette()[k]);
    c.text(w - 154, y, names[k]);
  }
  return c.str();
}

/// Track layout with city outlines; with a schedule, each train's path is
/// drawn on top with a dot at its origin.
inline std::string render_svg(const Infrastructure& infra, const Schedule* schedule = nullptr) {
  using namespace svg_detail;
  const double s = 14, pad = 20;
  const auto& g = infra.grid;
  Canvas c(pad * 2 + s * g.width(), pad * 2 + s * g.height());
  auto cx = [&](int col) { return pad + s * (col + 0.5); };
  auto cy = [&](int row) { return pad + s * (row + 0.5); };
  // Midpoint of the cell side a train moving in heading h leaves through.
  auto side = [&](Cell cell, Heading h) -> std::pair<double, double> {
    switch (h) {
      case Heading::North: return {cx(cell.col), cy(cell.row) - s / 2};
      case Heading::East: return {cx(cell.col) + s / 2, cy(cell.row)};
      case Heading::South: return {cx(cell.col), cy(cell.row) + s / 2};
      case Heading::West: return {cx(cell.col) - s / 2, cy(cell.row)};
    }
    return {cx(cell.col), cy(cell.row)};
  };
  for (const auto& city : infra.cities) {
    const double x0 = pad + s * city.west_port_col(), x1 = pad + s * (city.east_port_col() + 1);
    c.rect(x0, pad + s * city.trunk_row, x1 - x0, s * city.tracks, "#fff3d6", "#e0b050");
  }
  for (int r = 0; r < g.height(); ++r) {
    for (int col = 0; col < g.width(); ++col) {
      const Cell cell{r, col};
      const TransitionMatrix m = g.transitions(cell);
      if (m == 0) continue;
      for (Heading in : kHeadings) {
        for (Heading out : kHeadings) {
          if (!allows(m, in, out)) continue;
          const auto a = side(cell, turn(in, 2));
          const auto b = side(cell, out);
          if (in == turn(out, 2)) {
            // Dead end: a stub into the cell.
            c.line(a.first, a.second, cx(col), cy(r), "#444444", 2);
          } else {
            c.polyline({a, {cx(col), cy(r)}, b}, "#444444", 2);
          }
        }
      }
    }
  }
  if (schedule) {
    for (std::size_t i = 0; i < schedule->runs.size(); ++i) {
      const auto& run = schedule->runs[i];
      if (run.waypoints.empty()) continue;
      std::vector<std::pair<double, double>> pts;
      for (const auto& w : run.waypoints) pts.push_back({cx(w.waypoint.cell.col), cy(w.waypoint.cell.row)});
      const std::string& col = palette()[i % palette().size()];
      c.polyline(pts, col, 3);
      c.circle(pts.front().first, pts.front().second, 4, col);
      c.text(pts.front().first + 5, pts.front().second - 5, std::to_string(run.train));
    }
  }
  return c.str();
}

/// Writes every table and plot of the report into `dir` and returns the paths.
inline std::vector<fs::path> write_report(const AnalysisReport& rep, const fs::path& dir) {
  std::vector<fs::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    atomic_write(dir / name, text);
    written.push_back(dir / name);
  };
  put("metrics.csv", metrics_csv(rep));
  put("bins.csv", bins_csv(rep));
  put("histogram.csv", histogram_csv(rep));
  put("prediction.csv", prediction_csv(rep));
  put("speedup.svg", box_plot_svg(
                         rep, "Speed-up over the unrestricted solve", "speed-up",
                         {"upper_bound", "max_speedup", "baseline", "heuristic", "random"},
                         [](const BinStats& b) -> const Quantiles& { return b.speedup; }, true));
  put("lateness.svg", box_plot_svg(
                          rep, "Additional lateness over the unrestricted optimum", "additional lateness",
                          {"upper_bound", "max_speedup", "baseline", "heuristic", "random"},
                          [](const BinStats& b) -> const Quantiles& { return b.additional_lateness; }, false));
  put("nodes.svg", box_plot_svg(
                       rep, "Search nodes expanded", "nodes", scoper_names(),
                       [](const BinStats& b) -> const Quantiles& { return b.nodes; }, true));
  put("histogram.svg", histogram_svg(rep));
  put("prediction.svg", prediction_svg(rep));
  return written;
}

}  // namespace corescope
