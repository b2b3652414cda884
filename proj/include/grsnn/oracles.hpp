#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "grsnn/errors.hpp"

namespace grsnn::oracles {

constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

// Directed graph with positive integer lengths (distance mode) or edge
// values in (0, 1] (path-sum mode). Both live in `length` / `value`; each
// mode reads the field it needs.
struct WeightedEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::int64_t length = 1;
  double value = 1.0;
};

struct WeightedGraph {
  std::size_t nodes = 0;
  std::vector<WeightedEdge> edges;

  std::vector<std::vector<const WeightedEdge*>> out_index() const {
    std::vector<std::vector<const WeightedEdge*>> out(nodes);
    for (const auto& e : edges) out[e.src].push_back(&e);
    return out;
  }

  std::vector<std::size_t> out_degree() const {
    std::vector<std::size_t> d(nodes, 0);
    for (const auto& e : edges) ++d[e.src];
    return d;
  }
};

// Classical single-source shortest path (Dijkstra).
inline std::vector<std::int64_t> graph_distance(const WeightedGraph& g, std::size_t source) {
  if (source >= g.nodes) throw ContractError("graph_distance: source out of range");
  auto out = g.out_index();
  std::vector<std::int64_t> dist(g.nodes, kUnreachable);
  using Item = std::pair<std::int64_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0;
  pq.emplace(0, source);
  while (!pq.empty()) {
    auto [d, z] = pq.top();
    pq.pop();
    if (d != dist[z]) continue;
    for (const auto* e : out[z]) {
      const std::int64_t nd = d + e->length;
      if (nd < dist[e->dst]) {
        dist[e->dst] = nd;
        pq.emplace(nd, e->dst);
      }
    }
  }
  return dist;
}

inline std::int64_t graph_distance(const WeightedGraph& g, std::size_t x, std::size_t y) {
  return graph_distance(g, x)[y];
}

// Idealized event-driven spiking network used by the constructive
// equivalence checks. Each graph node hosts `units` threshold units with
// thresholds 1..units; a unit emits when the instantaneous arrival count of
// its node within one time bin reaches its threshold. Synapses are
// delta-shaped with integer delays. Events are processed in nondecreasing
// (time, node, hops) order.
struct EventSimResult {
  // spike (time, multiplicity) lists per node, time-ascending
  std::vector<std::vector<std::pair<std::int64_t, std::size_t>>> spikes;
  bool saturated = false;

  std::int64_t first_spike(std::size_t node) const {
    return spikes[node].empty() ? kUnreachable : spikes[node].front().first;
  }
};

struct EventSim {
  std::size_t units = 1;           // threshold units per node
  std::int64_t emission_latency = 0;  // arrival -> spike lag
  std::int64_t max_time = 0;       // spikes after this time are discarded
  std::int64_t max_hops = -1;      // path-length bound; -1 = unbounded
  bool fire_once = false;          // suppress repeat emissions per node

  // delays indexed parallel to g.edges
  EventSimResult run(const WeightedGraph& g, const std::vector<std::int64_t>& delays,
                     std::size_t source) const {
    if (delays.size() != g.edges.size())
      throw ContractError("EventSim: delay table size mismatch");
    for (auto d : delays)
      if (d < 0) throw ConfigError("EventSim: negative delay");

    auto out = g.out_index();
    EventSimResult res;
    res.spikes.assign(g.nodes, {});

    struct Arrival {
      std::int64_t time;
      std::size_t node;
      std::int64_t hops;
      std::size_t count;
      bool operator>(const Arrival& o) const {
        if (time != o.time) return time > o.time;
        if (node != o.node) return node > o.node;
        return hops > o.hops;
      }
    };
    std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> pq;

    // per-node arrival bookkeeping for the bin currently being filled
    std::vector<std::int64_t> bin_time(g.nodes, std::numeric_limits<std::int64_t>::min());
    std::vector<std::size_t> bin_count(g.nodes, 0);
    std::vector<bool> has_fired(g.nodes, false);

    auto emit = [&](std::size_t node, std::int64_t spike_time, std::int64_t hops,
                    std::size_t multiplicity) {
      if (multiplicity == 0 || spike_time > max_time) return;
      if (!res.spikes[node].empty() && res.spikes[node].back().first == spike_time)
        res.spikes[node].back().second += multiplicity;
      else
        res.spikes[node].emplace_back(spike_time, multiplicity);
      has_fired[node] = true;
      if (max_hops >= 0 && hops + 1 > max_hops) return;
      for (const auto* e : out[node]) {
        const std::size_t idx = static_cast<std::size_t>(e - g.edges.data());
        const std::int64_t arr = spike_time + delays[idx];
        if (arr > max_time) continue;
        pq.push({arr, e->dst, hops + 1, multiplicity});
      }
    };

    // the source is forced to spike at t = 0 (hop count 0); it occupies the
    // first unit of the source's time-0 bin
    bin_time[source] = 0;
    bin_count[source] = 1;
    emit(source, 0, 0, 1);

    while (!pq.empty()) {
      const Arrival a = pq.top();
      pq.pop();
      if (fire_once && has_fired[a.node]) continue;
      if (bin_time[a.node] != a.time) {
        bin_time[a.node] = a.time;
        bin_count[a.node] = 0;
      }
      const std::size_t before = bin_count[a.node];
      bin_count[a.node] += a.count;
      if (bin_count[a.node] > units) res.saturated = true;
      const std::size_t upto = std::min(bin_count[a.node], units);
      if (upto > before) emit(a.node, a.time + emission_latency, a.hops, upto - before);
    }
    return res;
  }
};

// First-spike time of the constructive shortest-path network: one
// threshold-1 unit per node, edge delay = length - 1 plus the unit's
// one-step emission latency. Equals graph_distance exactly within horizon.
inline std::vector<std::int64_t> spiking_graph_distance(const WeightedGraph& g,
                                                        std::size_t source,
                                                        std::int64_t horizon = -1) {
  std::vector<std::int64_t> delays;
  delays.reserve(g.edges.size());
  std::int64_t max_len = 1;
  for (const auto& e : g.edges) {
    if (e.length < 1) throw ConfigError("spiking_graph_distance: lengths must be >= 1");
    delays.push_back(e.length - 1);
    max_len = std::max(max_len, e.length);
  }
  EventSim sim;
  sim.units = 1;
  sim.emission_latency = 1;
  sim.fire_once = true;
  sim.max_time = horizon >= 0 ? horizon
                              : static_cast<std::int64_t>(g.nodes) * max_len + 1;
  auto res = sim.run(g, delays, source);
  std::vector<std::int64_t> first(g.nodes, kUnreachable);
  for (std::size_t z = 0; z < g.nodes; ++z) first[z] = res.first_spike(z);
  return first;
}

inline std::int64_t spiking_graph_distance_pair(const WeightedGraph& g, std::size_t x,
                                                std::size_t y) {
  return spiking_graph_distance(g, x)[y];
}

// Truncated Katz series: sum_{l=1..L} beta^l (A^l)_{xy}, computed by
// repeated sparse products. Returned as a dense pair matrix.
inline std::vector<std::vector<double>> katz_index(const WeightedGraph& g, double beta_katz,
                                                   std::size_t horizon) {
  const std::size_t V = g.nodes;
  std::vector<std::vector<double>> total(V, std::vector<double>(V, 0.0));
  std::vector<std::vector<double>> power(V, std::vector<double>(V, 0.0));
  for (std::size_t x = 0; x < V; ++x) power[x][x] = 1.0;
  for (std::size_t l = 0; l < horizon; ++l) {
    std::vector<std::vector<double>> next(V, std::vector<double>(V, 0.0));
    for (std::size_t x = 0; x < V; ++x)
      for (const auto& e : g.edges)
        if (power[x][e.src] != 0.0) next[x][e.dst] += power[x][e.src] * beta_katz;
    power.swap(next);
    for (std::size_t x = 0; x < V; ++x)
      for (std::size_t y = 0; y < V; ++y) total[x][y] += power[x][y];
  }
  return total;
}

// Truncated personalized-PageRank visit sums: sum_{l=1..L} (P^l)_{xy} with P
// the out-degree-normalized transition matrix.
inline std::vector<std::vector<double>> personalized_pagerank(const WeightedGraph& g,
                                                              std::size_t horizon) {
  const std::size_t V = g.nodes;
  const auto deg = g.out_degree();
  std::vector<std::vector<double>> total(V, std::vector<double>(V, 0.0));
  std::vector<std::vector<double>> power(V, std::vector<double>(V, 0.0));
  for (std::size_t x = 0; x < V; ++x) power[x][x] = 1.0;
  for (std::size_t l = 0; l < horizon; ++l) {
    std::vector<std::vector<double>> next(V, std::vector<double>(V, 0.0));
    for (std::size_t x = 0; x < V; ++x)
      for (const auto& e : g.edges)
        if (power[x][e.src] != 0.0)
          next[x][e.dst] += power[x][e.src] / static_cast<double>(deg[e.src]);
    power.swap(next);
    for (std::size_t x = 0; x < V; ++x)
      for (std::size_t y = 0; y < V; ++y) total[x][y] += power[x][y];
  }
  return total;
}

// Multiplicative path accumulation on the idealized network. Edge values in
// (0, 1] map to integer delays round(-log10(value) * delay_scale); every
// walk of <= horizon hops lands one spike at the target at the sum of its
// edge delays, and the decode sum_t 10^{-t/scale} * count(t) approximates
// the truncated classical series.
struct PathSumResult {
  std::vector<double> value;  // per target node
  bool saturated = false;
};

inline PathSumResult spiking_path_sum(const WeightedGraph& g,
                                      const std::function<double(const WeightedEdge&)>& edge_value,
                                      std::size_t source, std::size_t units,
                                      double delay_scale, std::size_t horizon) {
  std::vector<std::int64_t> delays;
  delays.reserve(g.edges.size());
  std::int64_t max_delay = 0;
  for (const auto& e : g.edges) {
    const double v = edge_value(e);
    if (!(v > 0.0) || v > 1.0)
      throw ConfigError("spiking_path_sum: edge values must lie in (0, 1]");
    const auto d = static_cast<std::int64_t>(std::llround(-std::log10(v) * delay_scale));
    delays.push_back(d);
    max_delay = std::max(max_delay, d);
  }
  EventSim sim;
  sim.units = units;
  sim.emission_latency = 0;
  sim.max_hops = static_cast<std::int64_t>(horizon);
  sim.max_time = max_delay * static_cast<std::int64_t>(horizon) + 1;
  auto res = sim.run(g, delays, source);

  PathSumResult out;
  out.saturated = res.saturated;
  out.value.assign(g.nodes, 0.0);
  for (std::size_t z = 0; z < g.nodes; ++z) {
    double acc = 0.0;
    for (auto [t, m] : res.spikes[z]) {
      if (z == source && t == 0) {
        // the forced source spike is not a path
        if (m > 1) acc += std::pow(10.0, 0.0) * static_cast<double>(m - 1);
        continue;
      }
      acc += std::pow(10.0, -static_cast<double>(t) / delay_scale) * static_cast<double>(m);
    }
    out.value[z] = acc;
  }
  return out;
}

}  // namespace grsnn::oracles
