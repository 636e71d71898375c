#pragma once

#include <algorithm>
#include <deque>
#include <queue>
#include <set>
#include <span>
#include <vector>

#include "corescope/grid.hpp"

namespace corescope {

using Path = std::vector<Waypoint>;

/// Hop distance from every node to the nearest target (kTimeInfinity if none).
inline std::vector<int> distances_to(const TopologyGraph& g, std::span<const int> targets) {
  std::vector<int> dist(g.nodes.size(), kTimeInfinity);
  std::deque<int> queue;
  for (int t : targets) {
    if (dist[static_cast<std::size_t>(t)] != 0) {
      dist[static_cast<std::size_t>(t)] = 0;
      queue.push_back(t);
    }
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : g.predecessors[static_cast<std::size_t>(v)]) {
      auto& du = dist[static_cast<std::size_t>(u)];
      if (du == kTimeInfinity) {
        du = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

inline std::vector<int> target_nodes(const TopologyGraph& g, std::span<const Waypoint> targets) {
  std::vector<int> out;
  for (const auto& t : targets) {
    if (auto i = g.find(t)) out.push_back(*i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Every heading-node of a cell present in the graph.
inline std::vector<Waypoint> waypoints_at(const TopologyGraph& g, Cell c) {
  std::vector<Waypoint> out;
  for (Heading h : kHeadings) {
    if (g.find({c, h})) out.push_back({c, h});
  }
  return out;
}

/// The k shortest paths from source to any target that never visit a cell
/// twice, ordered by hop length then lexicographically by waypoint sequence.
///
/// Best-first enumeration of partial paths with the exact hop distance to the
/// target set as admissible bound. All complete paths no longer than the k-th
/// one are collected before sorting, which makes the tie-breaking exact.
inline std::vector<Path> k_shortest_paths(const TopologyGraph& g, const Waypoint& source,
                                          std::span<const Waypoint> targets, int k,
                                          std::size_t max_expansions = 2'000'000) {
  if (k < 1) throw Error("k_shortest_paths: k must be >= 1");
  const auto src = g.find(source);
  const auto tnodes = target_nodes(g, targets);
  if (!src || tnodes.empty()) throw NoPath("source or targets not in graph");
  const auto dist = distances_to(g, tnodes);
  if (dist[static_cast<std::size_t>(*src)] == kTimeInfinity) throw NoPath("target unreachable");

  std::vector<char> is_target(g.nodes.size(), 0);
  for (int t : tnodes) is_target[static_cast<std::size_t>(t)] = 1;

  struct Partial {
    int bound;
    std::vector<int> nodes;
  };
  auto worse = [](const Partial& a, const Partial& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.nodes > b.nodes;  // node indices follow waypoint order
  };
  std::priority_queue<Partial, std::vector<Partial>, decltype(worse)> open(worse);
  open.push({dist[static_cast<std::size_t>(*src)], {*src}});

  std::vector<std::vector<int>> found;
  std::size_t expansions = 0;
  auto kth_length = [&] {
    std::vector<std::size_t> lens;
    for (const auto& p : found) lens.push_back(p.size() - 1);
    std::nth_element(lens.begin(), lens.begin() + (k - 1), lens.end());
    return static_cast<int>(lens[static_cast<std::size_t>(k - 1)]);
  };
  while (!open.empty() && expansions < max_expansions) {
    if (static_cast<int>(found.size()) >= k && open.top().bound > kth_length()) break;
    Partial p = open.top();
    open.pop();
    ++expansions;
    const int last = p.nodes.back();
    if (is_target[static_cast<std::size_t>(last)]) {
      found.push_back(std::move(p.nodes));
      continue;
    }
    for (int nxt : g.successors[static_cast<std::size_t>(last)]) {
      const auto dn = dist[static_cast<std::size_t>(nxt)];
      if (dn == kTimeInfinity) continue;
      const Cell cell = g.nodes[static_cast<std::size_t>(nxt)].cell;
      const bool revisits = std::any_of(p.nodes.begin(), p.nodes.end(), [&](int v) {
        return g.nodes[static_cast<std::size_t>(v)].cell == cell;
      });
      if (revisits) continue;
      Partial q{static_cast<int>(p.nodes.size()) + dn, p.nodes};
      q.nodes.push_back(nxt);
      open.push(std::move(q));
    }
  }
  if (found.empty()) throw NoPath("no cell-simple path to target");
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  if (static_cast<int>(found.size()) > k) found.resize(static_cast<std::size_t>(k));
  std::vector<Path> out;
  for (const auto& p : found) {
    Path path;
    for (int v : p) path.push_back(g.nodes[static_cast<std::size_t>(v)]);
    out.push_back(std::move(path));
  }
  return out;
}

/// Route alternatives of one train as a DAG of waypoints. Every edge takes
/// step_duration time steps (the train's cells-per-step reciprocal).
struct RouteDag {
  TrainId train = 0;
  int step_duration = 1;
  std::vector<Waypoint> nodes;               // sorted
  std::vector<std::vector<int>> successors;  // sorted
  int source = -1;
  std::vector<int> sinks;  // sorted

  std::optional<int> find(const Waypoint& w) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), w);
    if (it == nodes.end() || *it != w) return std::nullopt;
    return static_cast<int>(it - nodes.begin());
  }
  bool is_sink(int v) const { return std::binary_search(sinks.begin(), sinks.end(), v); }
  bool has_edge(const Waypoint& a, const Waypoint& b) const {
    auto i = find(a);
    auto j = find(b);
    if (!i || !j) return false;
    const auto& s = successors[static_cast<std::size_t>(*i)];
    return std::binary_search(s.begin(), s.end(), *j);
  }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& s : successors) n += s.size();
    return n;
  }
  bool operator==(const RouteDag&) const = default;
};

/// Kahn topological order; empty optional when the graph has a cycle.
inline std::optional<std::vector<int>> topological_order(const RouteDag& dag) {
  std::vector<int> indeg(dag.nodes.size(), 0);
  for (const auto& s : dag.successors)
    for (int v : s) ++indeg[static_cast<std::size_t>(v)];
  std::vector<int> order;
  std::deque<int> ready;
  for (std::size_t v = 0; v < indeg.size(); ++v)
    if (indeg[v] == 0) ready.push_back(static_cast<int>(v));
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop_front();
    order.push_back(v);
    for (int w : dag.successors[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
  }
  if (order.size() != dag.nodes.size()) return std::nullopt;
  return order;
}

inline bool is_acyclic(const RouteDag& dag) { return topological_order(dag).has_value(); }

namespace detail {

inline RouteDag build_dag(TrainId train, int duration, const std::set<Waypoint>& nodes,
                          const std::set<std::pair<Waypoint, Waypoint>>& edges,
                          const Waypoint& source, const std::set<Waypoint>& sinks) {
  RouteDag dag;
  dag.train = train;
  dag.step_duration = duration;
  dag.nodes.assign(nodes.begin(), nodes.end());
  dag.successors.resize(dag.nodes.size());
  for (const auto& [a, b] : edges) {
    dag.successors[static_cast<std::size_t>(*dag.find(a))].push_back(*dag.find(b));
  }
  for (auto& s : dag.successors) std::sort(s.begin(), s.end());
  if (auto s = dag.find(source)) dag.source = *s;
  for (const auto& w : sinks)
    if (auto i = dag.find(w)) dag.sinks.push_back(*i);
  std::sort(dag.sinks.begin(), dag.sinks.end());
  return dag;
}

}  // namespace detail

/// Union of paths sharing a source. A path whose edges would close a cycle
/// with the paths already merged is skipped.
inline RouteDag dag_from_paths(TrainId train, int step_duration, std::span<const Path> paths) {
  if (paths.empty()) throw NoPath("dag_from_paths: no paths");
  std::set<Waypoint> nodes;
  std::set<std::pair<Waypoint, Waypoint>> edges;
  std::set<Waypoint> sinks;
  const Waypoint source = paths.front().front();
  for (const auto& p : paths) {
    auto trial_nodes = nodes;
    auto trial_edges = edges;
    auto trial_sinks = sinks;
    trial_nodes.insert(p.begin(), p.end());
    for (std::size_t i = 0; i + 1 < p.size(); ++i) trial_edges.insert({p[i], p[i + 1]});
    trial_sinks.insert(p.back());
    if (!is_acyclic(detail::build_dag(train, step_duration, trial_nodes, trial_edges, source,
                                      trial_sinks))) {
      continue;
    }
    nodes = std::move(trial_nodes);
    edges = std::move(trial_edges);
    sinks = std::move(trial_sinks);
  }
  return detail::build_dag(train, step_duration, nodes, edges, source, sinks);
}

struct SubDag {
  RouteDag dag;
  /// Index in the original DAG of every kept node.
  std::vector<int> original;
};

/// Keeps the edges for which keep(u, i) holds (i indexes u's successor
/// list), then only the nodes on some source-to-sink path over them. The
/// source always stays so callers can detect the empty case.
template <class Keep>
SubDag sub_dag(const RouteDag& dag, Keep&& keep) {
  const std::size_t n = dag.nodes.size();
  SubDag out;
  out.dag.train = dag.train;
  out.dag.step_duration = dag.step_duration;
  if (dag.source < 0) {
    out.dag = dag;
    for (std::size_t v = 0; v < n; ++v) out.original.push_back(static_cast<int>(v));
    return out;
  }
  std::vector<std::vector<int>> succ(n), pred(n);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t i = 0; i < dag.successors[v].size(); ++i)
      if (keep(v, i)) {
        const int w = dag.successors[v][i];
        succ[v].push_back(w);
        pred[static_cast<std::size_t>(w)].push_back(static_cast<int>(v));
      }
  auto reach = [n](const std::vector<int>& from, const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack = from;
    for (int v : from) seen[static_cast<std::size_t>(v)] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[static_cast<std::size_t>(v)])
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(w);
        }
    }
    return seen;
  };
  const auto fwd = reach({dag.source}, succ);
  const auto bwd = reach(dag.sinks, pred);
  std::vector<int> index(n, -1);
  for (std::size_t v = 0; v < n; ++v)
    if ((fwd[v] && bwd[v]) || static_cast<int>(v) == dag.source) {
      index[v] = static_cast<int>(out.dag.nodes.size());
      out.dag.nodes.push_back(dag.nodes[v]);
      out.original.push_back(static_cast<int>(v));
    }
  // Index order is preserved, so nodes and successor lists stay sorted.
  out.dag.successors.resize(out.dag.nodes.size());
  for (std::size_t k = 0; k < out.original.size(); ++k) {
    const auto v = static_cast<std::size_t>(out.original[k]);
    if (!(fwd[v] && bwd[v])) continue;
    for (int w : succ[v])
      if (index[static_cast<std::size_t>(w)] >= 0 && bwd[static_cast<std::size_t>(w)])
        out.dag.successors[k].push_back(index[static_cast<std::size_t>(w)]);
  }
  out.dag.source = index[static_cast<std::size_t>(dag.source)];
  for (int s : dag.sinks)
    if (fwd[static_cast<std::size_t>(s)] && bwd[static_cast<std::size_t>(s)])
      out.dag.sinks.push_back(index[static_cast<std::size_t>(s)]);
  return out;
}

/// Removes nodes not on some source-to-sink path. Keeps the source even when
/// nothing is reachable so callers can detect the empty case.
inline RouteDag prune_dag(const RouteDag& dag) {
  return sub_dag(dag, [](std::size_t, std::size_t) { return true; }).dag;
}

/// All source-to-sink paths of the DAG that visit each cell at most once, in
/// lexicographic order of node indices. A path stops at the first sink.
inline std::vector<std::vector<int>> enumerate_dag_paths(const RouteDag& dag,
                                                         std::size_t cap = 100'000) {
  std::vector<std::vector<int>> out;
  if (dag.source < 0) return out;
  // Nodes are sorted by cell first, so equal cells are adjacent.
  std::vector<int> cell_id(dag.nodes.size());
  for (std::size_t v = 1; v < dag.nodes.size(); ++v)
    cell_id[v] = cell_id[v - 1] + (dag.nodes[v].cell == dag.nodes[v - 1].cell ? 0 : 1);
  std::vector<char> used(dag.nodes.empty() ? 0 : static_cast<std::size_t>(cell_id.back()) + 1);
  std::vector<int> current{dag.source};
  used[static_cast<std::size_t>(cell_id[static_cast<std::size_t>(dag.source)])] = 1;
  auto rec = [&](auto&& self) -> void {
    if (out.size() >= cap) return;
    const int v = current.back();
    if (dag.is_sink(v)) {
      out.push_back(current);
      return;
    }
    for (int w : dag.successors[static_cast<std::size_t>(v)]) {
      char& c = used[static_cast<std::size_t>(cell_id[static_cast<std::size_t>(w)])];
      if (c) continue;
      c = 1;
      current.push_back(w);
      self(self);
      current.pop_back();
      c = 0;
    }
  };
  rec(rec);
  return out;
}

}  // namespace corescope
