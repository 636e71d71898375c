#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "corescope/resched.hpp"
#include "corescope/scheduling.hpp"

namespace corescope {

struct SolveBudget {
  double time_limit_s = 200.0;
  /// High-level branchings; a deterministic limit independent of machine speed.
  std::size_t max_branchings = 200'000;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, BudgetExceeded };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::BudgetExceeded: return "budget_exceeded";
  }
  return "?";
}

struct SolveStats {
  double elapsed_s = 0;
  /// Time-window states visited by the single-train searches.
  std::uint64_t nodes_expanded = 0;
  /// Search-tree nodes split on a conflict.
  std::uint64_t branchings = 0;
  std::uint64_t generated = 0;
  bool proven = false;
  Cost lower_bound = 0;
  /// (branchings so far, incumbent cost), nonincreasing in cost.
  std::vector<std::pair<std::uint64_t, Cost>> trace;
};

struct Solution {
  std::vector<TrainRun> runs;  // ordered by train id
  Cost cost = 0;
  bool operator==(const Solution&) const = default;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<Solution> solution;
  SolveStats stats;
};

namespace solver_detail {

struct Constraint {
  enum class Kind { MinEntry, MaxExit };
  Kind kind = Kind::MinEntry;
  int node = -1;  // DAG node of the constrained train
  Time time = 0;
};

/// Constraints imposed on one train by the search; each applies only if the
/// train's route uses the node.
struct TrainConstraints {
  std::map<int, Time> min_entry;  // entry >= value
  std::map<int, Time> max_exit;   // leaves the node (enters the next one) <= value

  void add(const Constraint& c) {
    if (c.kind == Constraint::Kind::MinEntry) {
      auto [it, fresh] = min_entry.try_emplace(c.node, c.time);
      if (!fresh) it->second = std::max(it->second, c.time);
    } else {
      auto [it, fresh] = max_exit.try_emplace(c.node, c.time);
      if (!fresh) it->second = std::min(it->second, c.time);
    }
  }
};

struct Plan {
  int path = -1;
  std::vector<Time> times;
  Cost cost = 0;
  int clashes = 0;  // overlaps with the other trains' plans it was chosen against
};

/// Dense numbering of the cells used by a problem's route graphs, in Cell order.
struct CellIndex {
  std::vector<Cell> cells;

  explicit CellIndex(const ScopedProblem& problem) {
    for (const auto& tp : problem.trains)
      for (const auto& w : tp.dag.nodes) cells.push_back(w.cell);
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  }
  int of(Cell c) const { return static_cast<int>(std::lower_bound(cells.begin(), cells.end(), c) - cells.begin()); }
};

/// One held cell: train index, position along its route and closed interval.
struct Held {
  int cell = 0;
  Time from = 0, to = 0;
  int train = 0;
  int pos = 0;
  bool operator<(const Held& o) const {
    if (cell != o.cell) return cell < o.cell;
    if (from != o.from) return from < o.from;
    return train < o.train;
  }
};

/// Held cells sorted by cell, then start.
using Occupancy = std::vector<Held>;

inline std::pair<Occupancy::const_iterator, Occupancy::const_iterator> held_at(const Occupancy& occ, int cell) {
  auto lo = std::lower_bound(occ.begin(), occ.end(), cell, [](const Held& h, int c) { return h.cell < c; });
  auto hi = std::upper_bound(lo, occ.end(), cell, [](int c, const Held& h) { return c < h.cell; });
  return {lo, hi};
}

/// Single-train planning along each enumerated route. With only lower bounds
/// on entries and upper bounds on exits, the entry times that lie on some
/// complete plan form an interval per position, found by one forward and one
/// backward sweep.
class TrainPlanner {
 public:
  TrainPlanner(const TrainProblem& tp, const CostWeights& w, int self, const CellIndex& index)
      : tp_(&tp), w_(w), self_(self) {
    paths_ = enumerate_dag_paths(tp.dag);
    for (const auto& wp : tp.dag.nodes) cell_of_.push_back(index.of(wp.cell));
    in_degree_.assign(tp.dag.nodes.size(), 0);
    for (const auto& succ : tp.dag.successors)
      for (int v : succ) ++in_degree_[static_cast<std::size_t>(v)];
    const auto dev = tp.deviation();
    for (std::size_t p = 0; p < paths_.size(); ++p) {
      int d = 0;
      for (int v : paths_[p]) d += dev[static_cast<std::size_t>(v)];
      route_cost_.push_back(w_.route_change * d);
      const Time e_last = tp.earliest[static_cast<std::size_t>(paths_[p].back())];
      bound_.push_back(route_cost_.back() + lateness(e_last));
      order_.push_back(static_cast<int>(p));
    }
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) {
      return bound_[static_cast<std::size_t>(a)] < bound_[static_cast<std::size_t>(b)];
    });
  }

  const TrainProblem& problem() const { return *tp_; }
  int cell(int v) const { return cell_of_[static_cast<std::size_t>(v)]; }

  /// A single route with every entry time pinned: the train cannot move.
  bool fixed() const {
    if (paths_.size() != 1) return false;
    for (int v : paths_.front())
      if (!tp_->pinned(v)) return false;
    return true;
  }

  /// Cells held by `plan`, appended to `out` (unsorted).
  void hold(const Plan& plan, Occupancy& out) const {
    const auto& p = path(plan);
    const int n = tp_->step_duration();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Time to = i + 1 < p.size() ? plan.times[i + 1] : plan.times[i] + n;
      out.push_back({cell(p[i]), plan.times[i], to, self_, static_cast<int>(i)});
    }
  }
  const std::vector<int>& path(const Plan& plan) const { return paths_[static_cast<std::size_t>(plan.path)]; }

  Cost lateness(Time arrival) const {
    return w_.lateness * std::max<Cost>(0, arrival - tp_->scheduled.arrival());
  }

  /// Minimum-cost plan. Among equal-cost plans the one overlapping the other
  /// trains' cells in `layers` the least wins, then the earliest arrival.
  /// Without layers the first route in bound order, arriving as early as
  /// possible and waiting as early as possible.
  std::optional<Plan> best(const TrainConstraints& tc, const std::vector<const Occupancy*>* layers,
                           std::uint64_t& states) const {
    std::optional<Plan> out;
    for (int p : order_) {
      const auto pi = static_cast<std::size_t>(p);
      if (out && (bound_[pi] > out->cost || (bound_[pi] == out->cost && out->clashes == 0))) continue;
      auto iv = feasible(paths_[pi], tc, states);
      if (iv.empty()) continue;
      const Cost c = route_cost_[pi] + lateness(iv.back().first);
      if (out && (c > out->cost || (c == out->cost && out->clashes == 0))) continue;
      const Time arr_max = std::max(iv.back().first, tp_->scheduled.arrival());
      Plan cand = layers ? fewest_clashes(paths_[pi], std::move(iv), *layers, arr_max, states) : latest_moves(std::move(iv));
      cand.path = p;
      cand.cost = c;
      if (!out || c < out->cost || cand.clashes < out->clashes) out = std::move(cand);
    }
    return out;
  }

  struct Bounds {
    std::vector<Time> entry, exit;  // kTimeInfinity where no complete plan uses the node
  };

  /// Earliest entry to and exit from every DAG node over complete plans
  /// meeting tc.
  Bounds min_entries(const TrainConstraints& tc, std::uint64_t& states) const {
    const int n = tp_->step_duration();
    Bounds out{std::vector<Time>(tp_->dag.nodes.size(), kTimeInfinity),
               std::vector<Time>(tp_->dag.nodes.size(), kTimeInfinity)};
    for (const auto& path : paths_) {
      const auto iv = feasible(path, tc, states);
      for (std::size_t i = 0; i < iv.size(); ++i) {
        const auto v = static_cast<std::size_t>(path[i]);
        out.entry[v] = std::min(out.entry[v], iv[i].first);
        out.exit[v] = std::min(out.exit[v], i + 1 < iv.size() ? iv[i + 1].first : iv[i].first + n);
      }
    }
    return out;
  }

  /// u -> v is the only way out of u and the only way into v.
  bool forced_edge(int u, int v) const {
    const auto& dag = tp_->dag;
    const auto& succ = dag.successors[static_cast<std::size_t>(u)];
    return succ.size() == 1 && succ.front() == v && in_degree_[static_cast<std::size_t>(v)] == 1 && !dag.is_sink(u);
  }

  TrainRun to_run(const Plan& plan) const {
    TrainRun run{tp_->train, tp_->step_duration(), {}};
    const auto& path = paths_[static_cast<std::size_t>(plan.path)];
    for (std::size_t i = 0; i < path.size(); ++i) run.waypoints.push_back({node(path[i]), plan.times[i]});
    return run;
  }

 private:
  using Intervals = std::vector<std::pair<Time, Time>>;

  const Waypoint& node(int v) const { return tp_->dag.nodes[static_cast<std::size_t>(v)]; }

  /// Per position, the entry times lying on some complete plan along `path`;
  /// empty if there is none.
  Intervals feasible(const std::vector<int>& path, const TrainConstraints& tc, std::uint64_t& states) const {
    const int n = tp_->step_duration();
    const std::size_t len = path.size();
    Intervals iv(len);
    states += len;
    for (std::size_t i = 0; i < len; ++i) {
      const auto v = static_cast<std::size_t>(path[i]);
      Time lo = tp_->earliest[v];
      Time hi = tp_->latest[v];
      if (auto it = tc.min_entry.find(path[i]); it != tc.min_entry.end()) lo = std::max(lo, it->second);
      if (i > 0) {
        if (auto it = tc.max_exit.find(path[i - 1]); it != tc.max_exit.end()) hi = std::min(hi, it->second);
        lo = std::max(lo, iv[i - 1].first + n);
      }
      if (i + 1 == len)
        if (auto it = tc.max_exit.find(path[i]); it != tc.max_exit.end()) hi = std::min(hi, it->second - n);
      if (hi < lo) return {};
      iv[i] = {lo, hi};
    }
    for (std::size_t i = len - 1; i-- > 0;) {
      iv[i].second = std::min(iv[i].second, iv[i + 1].second - n);
      if (iv[i].second < iv[i].first) return {};
    }
    return iv;
  }

  Plan latest_moves(Intervals iv) const {
    const int n = tp_->step_duration();
    Plan out;
    out.times.resize(iv.size());
    out.times.back() = iv.back().first;
    for (std::size_t i = iv.size() - 1; i-- > 0;) out.times[i] = std::min(iv[i].second, out.times[i + 1] - n);
    return out;
  }

  using Spans = std::vector<std::pair<Time, Time>>;

  /// Other trains' intervals at `cell` that meet [lo, hi].
  void held(const std::vector<const Occupancy*>& layers, int cell, Time lo, Time hi, Spans& out) const {
    out.clear();
    for (const Occupancy* occ : layers) {
      auto [b, e] = held_at(*occ, cell);
      for (auto it = b; it != e; ++it)
        if (it->train != self_ && it->from <= hi && lo <= it->to) out.push_back({it->from, it->to});
    }
  }

  static int overlaps(const Spans& spans, Time s, Time t) {
    int k = 0;
    for (const auto& [x, y] : spans) k += x <= t && s <= y;
    return k;
  }

  /// Plan inside `iv` arriving no later than arr_max with the fewest
  /// overlaps with the other trains' cells; among equals it moves as late as
  /// possible.
  Plan fewest_clashes(const std::vector<int>& path, Intervals iv, const std::vector<const Occupancy*>& layers,
                      Time arr_max, std::uint64_t& states) const {
    constexpr int kInf = std::numeric_limits<int>::max() / 2;
    const int n = tp_->step_duration();
    const std::size_t len = path.size();
    iv.back().second = std::min(iv.back().second, arr_max);
    for (std::size_t i = len - 1; i-- > 0;) iv[i].second = std::min(iv[i].second, iv[i + 1].second - n);
    Spans h;
    std::vector<std::vector<int>> val(len);
    std::vector<std::vector<Time>> choice(len);
    for (std::size_t i = 0; i < len; ++i) {
      const auto [lo, hi] = iv[i];
      const auto w = static_cast<std::size_t>(hi - lo + 1);
      states += w;
      val[i].assign(w, kInf);
      choice[i].assign(w, 0);
      if (i == 0) {
        std::fill(val[i].begin(), val[i].end(), 0);
        continue;
      }
      const auto [plo, phi] = iv[i - 1];
      const auto& pv = val[i - 1];
      held(layers, cell(path[i - 1]), plo, hi, h);
      if (h.empty()) {
        // Running minimum over s <= t - n; later s wins ties.
        int run = kInf;
        Time arg = 0;
        Time s = plo;
        for (std::size_t j = 0; j < w; ++j) {
          const Time t = lo + static_cast<Time>(j);
          for (; s <= std::min(phi, t - n); ++s) {
            const int x = pv[static_cast<std::size_t>(s - plo)];
            if (x <= run) {
              run = x;
              arg = s;
            }
          }
          val[i][j] = run;
          choice[i][j] = arg;
        }
        continue;
      }
      for (std::size_t j = 0; j < w; ++j) {
        const Time t = lo + static_cast<Time>(j);
        for (Time s = std::min(phi, t - n); s >= plo; --s) {
          const int x = pv[static_cast<std::size_t>(s - plo)] + overlaps(h, s, t);
          if (x < val[i][j]) {
            val[i][j] = x;
            choice[i][j] = s;
          }
        }
      }
    }
    Plan out;
    out.clashes = kInf;
    out.times.assign(len, 0);
    held(layers, cell(path.back()), iv.back().first, iv.back().second + n, h);
    for (std::size_t j = 0; j < val.back().size(); ++j) {
      const Time t = iv.back().first + static_cast<Time>(j);
      const int x = val.back()[j] + overlaps(h, t, t + n);
      if (x < out.clashes) {
        out.clashes = x;
        out.times.back() = t;
      }
    }
    for (std::size_t i = len - 1; i > 0; --i)
      out.times[i - 1] = choice[i][static_cast<std::size_t>(out.times[i] - iv[i].first)];
    return out;
  }

  const TrainProblem* tp_;
  CostWeights w_;
  int self_;
  std::vector<int> cell_of_;
  std::vector<std::vector<int>> paths_;
  std::vector<Cost> route_cost_;
  std::vector<Cost> bound_;
  std::vector<int> order_;
  std::vector<int> in_degree_;
};

struct Node {
  int parent = -1;
  int train = -1;  // index into problem trains; -1 at the root
  std::vector<Constraint> constraints;
  std::shared_ptr<const Plan> plan;
  Cost cost = 0;
  int conflicts = 0;
  int depth = 0;
};

/// Clashes of distinct train pairs tried per expansion when looking for one
/// that raises the bound.
inline constexpr std::size_t kClashCandidates = 4;

struct Clash {
  int cell = 0;  // dense index
  std::size_t a = 0, b = 0;  // train indices
  Time a0 = 0, a1 = 0, b0 = 0, b1 = 0;
  std::size_t ia = 0, ib = 0;  // positions in the two runs
};

/// First conflict by overlap start, then cell, then trains; plus the total
/// count. `moving` holds the cells of the trains that can still change,
/// `fixed` those of the others (which never clash among themselves).
inline bool clash_before(const Clash& x, const Clash& y) {
  return std::make_tuple(std::max(x.a0, x.b0), x.cell, x.a, x.b) < std::make_tuple(std::max(y.a0, y.b0), y.cell, y.a, y.b);
}

/// Earliest clash overall and the number of clashing pairs of holds. With
/// `per_pair`, also the earliest clash of every pair of trains, earliest first.
inline std::pair<std::optional<Clash>, int> first_clash(const Occupancy& moving, const Occupancy& fixed,
                                                        std::vector<Clash>* per_pair = nullptr) {
  std::optional<Clash> best;
  int count = 0;
  auto note = [&](const Held& p, const Held& q) {
    ++count;
    const Held& x = p.train < q.train ? p : q;
    const Held& y = p.train < q.train ? q : p;
    Clash c{x.cell, static_cast<std::size_t>(x.train), static_cast<std::size_t>(y.train), x.from, x.to,
            y.from, y.to, static_cast<std::size_t>(x.pos), static_cast<std::size_t>(y.pos)};
    if (!best || clash_before(c, *best)) best = c;
    if (!per_pair) return;
    auto it = std::find_if(per_pair->begin(), per_pair->end(), [&](const Clash& o) { return o.a == c.a && o.b == c.b; });
    if (it == per_pair->end()) per_pair->push_back(c);
    else if (clash_before(c, *it)) *it = c;
  };
  for (std::size_t i = 0; i < moving.size(); ++i) {
    const Held& h = moving[i];
    for (std::size_t j = i + 1; j < moving.size() && moving[j].cell == h.cell && moving[j].from <= h.to; ++j)
      if (moving[j].train != h.train) note(h, moving[j]);
    if (i == 0 || moving[i - 1].cell != h.cell) {
      auto [lo, hi] = held_at(fixed, h.cell);
      for (std::size_t k = i; k < moving.size() && moving[k].cell == h.cell; ++k)
        for (auto it = lo; it != hi; ++it)
          if (it->from <= moving[k].to && moving[k].from <= it->to) note(moving[k], *it);
    }
  }
  if (per_pair) std::sort(per_pair->begin(), per_pair->end(), clash_before);
  return {best, count};
}

/// Position pairs along the two current paths of the maximal stretch of
/// shared cells around the clash in which both trains are forced from cell to
/// cell (same or opposite direction). A train using any of these waypoints
/// uses all of them, and two trains that never overlap pass every cell of
/// the stretch in the same order.
inline std::vector<std::pair<std::size_t, std::size_t>> shared_stretch(const TrainPlanner& pa, const std::vector<int>& a,
                                                                      const TrainPlanner& pb, const std::vector<int>& b,
                                                                      std::size_t ia, std::size_t ib) {
  auto cell = [](const TrainPlanner& p, int v) { return p.problem().dag.nodes[static_cast<std::size_t>(v)].cell; };
  std::vector<std::pair<std::size_t, std::size_t>> out{{ia, ib}};
  auto shared = [&](long x, long y) {
    return x >= 0 && y >= 0 && x < static_cast<long>(a.size()) && y < static_cast<long>(b.size()) &&
           cell(pa, a[static_cast<std::size_t>(x)]) == cell(pb, b[static_cast<std::size_t>(y)]);
  };
  auto forced = [](const TrainPlanner& p, const std::vector<int>& path, std::size_t x, std::size_t y) {
    return x < y ? p.forced_edge(path[x], path[y]) : p.forced_edge(path[y], path[x]);
  };
  const long sa = static_cast<long>(ia), sb = static_cast<long>(ib);
  int bstep = 0;  // +1: B runs along with A, -1: against
  if (shared(sa + 1, sb + 1) || shared(sa - 1, sb - 1)) bstep = 1;
  else if (shared(sa + 1, sb - 1) || shared(sa - 1, sb + 1)) bstep = -1;
  if (bstep == 0) return out;
  for (int astep : {1, -1}) {
    long x = sa, y = sb;
    while (shared(x + astep, y + astep * bstep)) {
      const long nx = x + astep, ny = y + astep * bstep;
      if (!forced(pa, a, static_cast<std::size_t>(x), static_cast<std::size_t>(nx))) break;
      if (!forced(pb, b, static_cast<std::size_t>(y), static_cast<std::size_t>(ny))) break;
      x = nx;
      y = ny;
      out.push_back({static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
    }
  }
  return out;
}

}  // namespace solver_detail

/// Exact conflict-based branch and bound. The root plans every train alone
/// (the relaxation without resource exclusion). A conflict between A and B
/// at a cell splits on the order in which they pass it: "B first" bounds A's
/// entries by B's earliest possible exits, along the whole stretch the two
/// trains are forced through together, and symmetrically for "A first". If
/// such a bound does not cut off the current plan, that order is split again
/// on the leader's current exit. Every child cuts off a current plan and the
/// children cover all conflict-free solutions, so best-first search on cost
/// returns an optimum. Deterministic; `seed` is accepted for interface
/// stability and not used.
inline SolveResult solve(const ScopedProblem& problem, const SolveBudget& budget = {},
                         std::uint64_t seed = 0) {
  (void)seed;
  using namespace solver_detail;
  using Clock = std::chrono::steady_clock;
  const auto t_start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t_start).count(); };

  SolveResult result;
  auto finish_infeasible = [&] {
    result.status = SolveStatus::Infeasible;
    result.stats.proven = true;
    result.stats.elapsed_s = elapsed();
    return result;
  };
  const std::size_t m = problem.trains.size();
  const CellIndex index(problem);
  std::vector<TrainPlanner> planners;
  planners.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    planners.emplace_back(problem.trains[i], problem.weights, static_cast<int>(i), index);
  std::vector<char> fixed(m);
  for (std::size_t i = 0; i < m; ++i) fixed[i] = planners[i].fixed();

  // Fixed trains first: their cells are static for the whole search.
  std::vector<Plan> root_plans(m);
  Cost root_cost = 0;
  Occupancy fixed_occ, moving_occ;
  const std::vector<const Occupancy*> layers{&fixed_occ, &moving_occ};
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < m; ++i) {
      if (static_cast<bool>(fixed[i]) != (pass == 0)) continue;
      auto p = planners[i].best({}, pass == 0 ? nullptr : &layers, result.stats.nodes_expanded);
      if (!p) return finish_infeasible();
      root_cost += p->cost;
      planners[i].hold(*p, pass == 0 ? fixed_occ : moving_occ);
      std::sort(moving_occ.begin(), moving_occ.end());
      root_plans[i] = std::move(*p);
    }
    if (pass == 0) {
      std::sort(fixed_occ.begin(), fixed_occ.end());
      // Two fixed trains holding a cell at once can never be separated.
      if (first_clash(fixed_occ, {}).first) return finish_infeasible();
    }
  }
  result.stats.lower_bound = root_cost;

  std::vector<Node> nodes;
  auto plans_of = [&](int id) {
    std::vector<const Plan*> out(m, nullptr);
    for (int k = id; k >= 0; k = nodes[static_cast<std::size_t>(k)].parent) {
      const Node& nd = nodes[static_cast<std::size_t>(k)];
      if (nd.train >= 0 && !out[static_cast<std::size_t>(nd.train)]) out[static_cast<std::size_t>(nd.train)] = nd.plan.get();
    }
    for (std::size_t i = 0; i < m; ++i)
      if (!out[i]) out[i] = &root_plans[i];
    return out;
  };
  auto constraints_of = [&](int id, std::size_t train) {
    TrainConstraints tc;
    for (int k = id; k >= 0; k = nodes[static_cast<std::size_t>(k)].parent) {
      const Node& nd = nodes[static_cast<std::size_t>(k)];
      if (nd.train != static_cast<int>(train)) continue;
      for (const auto& c : nd.constraints) tc.add(c);
    }
    return tc;
  };
  auto moving_of = [&](const std::vector<const Plan*>& plans) {
    Occupancy occ;
    for (std::size_t i = 0; i < m; ++i)
      if (!fixed[i]) planners[i].hold(*plans[i], occ);
    std::sort(occ.begin(), occ.end());
    return occ;
  };

  auto key_less = [&](int x, int y) {
    const Node& a = nodes[static_cast<std::size_t>(x)];
    const Node& b = nodes[static_cast<std::size_t>(y)];
    return std::make_tuple(a.cost, a.conflicts, -a.depth, x) > std::make_tuple(b.cost, b.conflicts, -b.depth, y);
  };
  std::priority_queue<int, std::vector<int>, decltype(key_less)> open(key_less);

  std::optional<Solution> incumbent;
  auto consider = [&](int id) {
    const Node& nd = nodes[static_cast<std::size_t>(id)];
    if (nd.conflicts != 0 || (incumbent && incumbent->cost <= nd.cost)) return;
    const auto plans = plans_of(id);
    Solution sol{{}, nd.cost};
    for (std::size_t i = 0; i < m; ++i) sol.runs.push_back(planners[i].to_run(*plans[i]));
    incumbent = std::move(sol);
    result.stats.trace.push_back({result.stats.branchings, nd.cost});
  };

  {
    Node root;
    root.cost = root_cost;
    root.conflicts = first_clash(moving_occ, fixed_occ).second;
    nodes.push_back(root);
    consider(0);
    open.push(0);
    result.stats.generated = 1;
  }

  bool exhausted_budget = false;
  while (!open.empty()) {
    const int id = open.top();
    if (incumbent && nodes[static_cast<std::size_t>(id)].cost >= incumbent->cost) break;
    open.pop();
    if (result.stats.branchings >= budget.max_branchings || elapsed() > budget.time_limit_s) {
      exhausted_budget = true;
      result.stats.lower_bound = nodes[static_cast<std::size_t>(id)].cost;
      break;
    }
    const auto plans = plans_of(id);
    const Occupancy moving = moving_of(plans);
    std::vector<Clash> pairs;
    first_clash(moving, fixed_occ, &pairs);
    if (pairs.empty()) continue;  // conflict-free nodes are incumbents already
    ++result.stats.branchings;
    const Node& parent = nodes[static_cast<std::size_t>(id)];
    const std::vector<const Occupancy*> node_layers{&fixed_occ, &moving};

    auto children_of = [&](const Clash& clash) {
      std::vector<Node> out;
      const TrainPlanner& pa = planners[clash.a];
      const TrainPlanner& pb = planners[clash.b];
      const TrainConstraints ca = constraints_of(id, clash.a);
      const TrainConstraints cb = constraints_of(id, clash.b);
      const auto& path_a = pa.path(*plans[clash.a]);
      const auto& path_b = pb.path(*plans[clash.b]);
      const auto stretch = shared_stretch(pa, path_a, pb, path_b, clash.ia, clash.ib);
      const auto ea = pa.min_entries(ca, result.stats.nodes_expanded);
      const auto eb = pb.min_entries(cb, result.stats.nodes_expanded);
      // "B before A" bounds A's entries along the stretch, "A before B" B's.
      using Kind = Constraint::Kind;
      std::vector<Constraint> a_range, b_range;
      bool cuts_a = false, cuts_b = false;
      for (const auto& [x, y] : stretch) {
        const int va = path_a[x], vb = path_b[y];
        const Time a_after = eb.exit[static_cast<std::size_t>(vb)] + 1;
        const Time b_after = ea.exit[static_cast<std::size_t>(va)] + 1;
        a_range.push_back({Kind::MinEntry, va, a_after});
        b_range.push_back({Kind::MinEntry, vb, b_after});
        cuts_a = cuts_a || plans[clash.a]->times[x] < a_after;
        cuts_b = cuts_b || plans[clash.b]->times[y] < b_after;
      }
      // When a range does not cut off the current plan, that order is split
      // once more on the other train's current exit: either the follower waits
      // for it, or the leader leaves earlier than it does now.
      std::vector<std::pair<std::size_t, std::vector<Constraint>>> splits;
      auto order = [&](std::size_t first, std::size_t second, std::vector<Constraint> range, bool cuts, int v_first,
                       int v_second, Time first_exit) {
        if (cuts) {
          splits.push_back({second, std::move(range)});
          return;
        }
        range.push_back({Kind::MinEntry, v_second, first_exit + 1});
        splits.push_back({second, std::move(range)});
        splits.push_back({first, {{Kind::MaxExit, v_first, first_exit - 1}}});
      };
      const int wa = path_a[clash.ia], wb = path_b[clash.ib];
      order(clash.b, clash.a, std::move(a_range), cuts_a, wb, wa, clash.b1);
      order(clash.a, clash.b, std::move(b_range), cuts_b, wa, wb, clash.a1);
      for (auto& [train, cons] : splits) {
        if (fixed[train]) continue;  // its only plan is the one cut off
        TrainConstraints tc = train == clash.a ? ca : cb;
        for (const auto& c : cons) tc.add(c);
        auto plan = planners[train].best(tc, &node_layers, result.stats.nodes_expanded);
        if (!plan) continue;
        Node child;
        child.parent = id;
        child.train = static_cast<int>(train);
        child.constraints = std::move(cons);
        child.cost = parent.cost - plans[train]->cost + plan->cost;
        child.depth = parent.depth + 1;
        child.plan = std::make_shared<const Plan>(std::move(*plan));
        out.push_back(std::move(child));
      }
      return out;
    };

    // Prefer a clash whose every resolution costs more (it raises the bound);
    // otherwise the one whose cheapest resolution costs most, earliest first.
    std::vector<Node> children;
    Cost children_floor = 0;
    for (std::size_t k = 0; k < pairs.size() && k < kClashCandidates; ++k) {
      auto cand = children_of(pairs[k]);
      Cost floor = std::numeric_limits<Cost>::max();
      for (const auto& c : cand) floor = std::min(floor, c.cost);
      if (k == 0 || floor > children_floor) {
        children = std::move(cand);
        children_floor = floor;
      }
      if (children_floor > parent.cost) break;
    }

    for (auto& child : children) {
      const std::size_t train = static_cast<std::size_t>(child.train);
      Occupancy kept, fresh, child_moving;
      kept.reserve(moving.size());
      for (const auto& h : moving)
        if (h.train != static_cast<int>(train)) kept.push_back(h);
      planners[train].hold(*child.plan, fresh);
      std::sort(fresh.begin(), fresh.end());
      child_moving.reserve(kept.size() + fresh.size());
      std::merge(kept.begin(), kept.end(), fresh.begin(), fresh.end(), std::back_inserter(child_moving));
      child.conflicts = first_clash(child_moving, fixed_occ).second;
      nodes.push_back(std::move(child));
      const int cid = static_cast<int>(nodes.size()) - 1;
      ++result.stats.generated;
      consider(cid);
      open.push(cid);
    }
  }

  result.stats.elapsed_s = elapsed();
  if (incumbent) {
    result.solution = std::move(incumbent);
    result.stats.proven = !exhausted_budget;
    if (result.stats.proven) result.stats.lower_bound = result.solution->cost;
    result.status = result.stats.proven ? SolveStatus::Optimal : SolveStatus::Feasible;
  } else {
    result.status = exhausted_budget ? SolveStatus::BudgetExceeded : SolveStatus::Infeasible;
    result.stats.proven = !exhausted_budget;
  }
  return result;
}

}  // namespace corescope
