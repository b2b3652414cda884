#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "grsnn/oracles.hpp"
#include "grsnn/rng.hpp"

using namespace grsnn;
using namespace grsnn::oracles;

namespace {

// Exhaustive minimum over walks of bounded hop count.
std::int64_t brute_distance(const WeightedGraph& g, std::size_t x, std::size_t y) {
  auto out = g.out_index();
  std::int64_t best = (x == y) ? 0 : kUnreachable;
  std::function<void(std::size_t, std::int64_t, std::size_t)> dfs =
      [&](std::size_t z, std::int64_t len, std::size_t hops) {
        if (z == y && hops > 0 && len < best) best = len;
        if (hops >= g.nodes) return;
        for (const auto* e : out[z])
          if (len + e->length < best) dfs(e->dst, len + e->length, hops + 1);
      };
  dfs(x, 0, 0);
  return best;
}

// Exhaustive sum over walks of <= horizon hops of the product of edge values.
double brute_path_sum(const WeightedGraph& g,
                      const std::function<double(const WeightedEdge&)>& value, std::size_t x,
                      std::size_t y, std::size_t horizon) {
  auto out = g.out_index();
  double total = 0.0;
  std::function<void(std::size_t, double, std::size_t)> dfs = [&](std::size_t z, double prod,
                                                                  std::size_t hops) {
    if (z == y && hops > 0) total += prod;
    if (hops == horizon) return;
    for (const auto* e : out[z]) dfs(e->dst, prod * value(*e), hops + 1);
  };
  dfs(x, 1.0, 0);
  return total;
}

WeightedGraph chain_graph(std::vector<std::int64_t> lengths) {
  WeightedGraph g;
  g.nodes = lengths.size() + 1;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    g.edges.push_back({i, i + 1, lengths[i], 1.0});
  return g;
}

WeightedGraph random_connected(Rng& rng, std::size_t nodes, double density,
                               std::int64_t max_len) {
  WeightedGraph g;
  g.nodes = nodes;
  // random Hamiltonian cycle guarantees strong connectivity
  std::vector<std::size_t> perm(nodes);
  for (std::size_t i = 0; i < nodes; ++i) perm[i] = i;
  for (std::size_t i = nodes; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
  for (std::size_t i = 0; i < nodes; ++i)
    g.edges.push_back({perm[i], perm[(i + 1) % nodes], 1 + static_cast<std::int64_t>(rng.uniform_int(max_len)), 1.0});
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j)
      if (i != j && rng.uniform() < density)
        g.edges.push_back({i, j, 1 + static_cast<std::int64_t>(rng.uniform_int(max_len)), 1.0});
  return g;
}

}  // namespace

TEST_CASE("graph distance basics") {
  auto g = chain_graph({2, 3});
  CHECK(graph_distance(g, 0, 0) == 0);
  CHECK(graph_distance(g, 0, 2) == 5);
  CHECK(graph_distance(g, 2, 0) == kUnreachable);
}

TEST_CASE("dijkstra agrees with exhaustive enumeration on small graphs") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    auto g = random_connected(rng, 4 + rng.uniform_int(5), 0.25, 4);
    for (std::size_t x = 0; x < g.nodes; ++x) {
      auto dist = graph_distance(g, x);
      for (std::size_t y = 0; y < g.nodes; ++y) CHECK(dist[y] == brute_distance(g, x, y));
    }
  }
}

TEST_CASE("spiking first-spike time equals the shortest distance") {
  auto g = chain_graph({2, 3});
  CHECK(spiking_graph_distance_pair(g, 0, 2) == 5);
  WeightedGraph direct;
  direct.nodes = 2;
  direct.edges.push_back({0, 1, 1, 1.0});
  CHECK(spiking_graph_distance_pair(direct, 0, 1) == 1);
  WeightedGraph disconnected;
  disconnected.nodes = 2;
  CHECK(spiking_graph_distance_pair(disconnected, 0, 1) == kUnreachable);
}

TEST_CASE("spiking distance rejects non-positive lengths") {
  WeightedGraph g;
  g.nodes = 2;
  g.edges.push_back({0, 1, 0, 1.0});
  CHECK_THROWS_AS(spiking_graph_distance_pair(g, 0, 1), ConfigError);
}

TEST_CASE("spiking distance equals dijkstra on random strongly connected graphs") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    auto g = random_connected(rng, 5 + rng.uniform_int(20), 0.15, 4);
    for (std::size_t x = 0; x < g.nodes; ++x) {
      auto classic = graph_distance(g, x);
      auto spiking = spiking_graph_distance(g, x);
      for (std::size_t y = 0; y < g.nodes; ++y) CHECK(spiking[y] == classic[y]);
    }
  }
}

TEST_CASE("katz series on hand graphs") {
  WeightedGraph single;
  single.nodes = 2;
  single.edges.push_back({0, 1, 1, 1.0});
  CHECK(katz_index(single, 0.5, 4)[0][1] == Catch::Approx(0.5).epsilon(1e-14));

  auto two = chain_graph({1, 1});
  CHECK(katz_index(two, 0.5, 4)[0][2] == Catch::Approx(0.25).epsilon(1e-14));

  WeightedGraph empty;
  empty.nodes = 3;
  auto k = katz_index(empty, 0.5, 4);
  for (const auto& row : k)
    for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("pagerank transition sums on hand graphs") {
  WeightedGraph g;
  g.nodes = 3;
  g.edges.push_back({0, 1, 1, 1.0});
  g.edges.push_back({0, 2, 1, 1.0});
  auto p = personalized_pagerank(g, 1);
  CHECK(p[0][1] == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(p[0][2] == Catch::Approx(0.5).epsilon(1e-14));

  WeightedGraph one;
  one.nodes = 2;
  one.edges.push_back({0, 1, 1, 1.0});
  CHECK(personalized_pagerank(one, 1)[0][1] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("truncated series match exhaustive walk enumeration") {
  Rng rng(37);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t nodes = 3 + rng.uniform_int(6);
    WeightedGraph g;
    g.nodes = nodes;
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t j = 0; j < nodes; ++j)
        if (i != j && rng.uniform() < 0.3) g.edges.push_back({i, j, 1, 1.0});
    const double beta = 0.3;
    auto katz = katz_index(g, beta, 5);
    auto ppr = personalized_pagerank(g, 5);
    auto deg = g.out_degree();
    auto katz_value = [&](const WeightedEdge&) { return beta; };
    auto ppr_value = [&](const WeightedEdge& e) {
      return 1.0 / static_cast<double>(deg[e.src]);
    };
    for (std::size_t x = 0; x < nodes; ++x)
      for (std::size_t y = 0; y < nodes; ++y) {
        CHECK(katz[x][y] == Catch::Approx(brute_path_sum(g, katz_value, x, y, 5)).margin(1e-12));
        CHECK(ppr[x][y] == Catch::Approx(brute_path_sum(g, ppr_value, x, y, 5)).margin(1e-12));
      }
  }
}

TEST_CASE("path-sum construction on hand graphs") {
  WeightedGraph single;
  single.nodes = 2;
  single.edges.push_back({0, 1, 1, 0.1});
  auto value = [](const WeightedEdge& e) { return e.value; };
  auto r = spiking_path_sum(single, value, 0, 8, 1.0, 4);
  CHECK_FALSE(r.saturated);
  CHECK(r.value[1] == Catch::Approx(0.1).epsilon(1e-12));

  // two parallel single-edge paths are counted through thresholds 1 and 2
  WeightedGraph parallel;
  parallel.nodes = 2;
  parallel.edges.push_back({0, 1, 1, 0.1});
  parallel.edges.push_back({0, 1, 1, 0.1});
  auto r2 = spiking_path_sum(parallel, value, 0, 8, 1.0, 4);
  CHECK(r2.value[1] == Catch::Approx(0.2).epsilon(1e-12));

  // quantization case: value 0.13 at scale 4 lands on delay 4 -> 10^-1
  WeightedGraph q;
  q.nodes = 2;
  q.edges.push_back({0, 1, 1, 0.13});
  auto r3 = spiking_path_sum(q, value, 0, 8, 4.0, 4);
  CHECK(r3.value[1] == Catch::Approx(0.1).epsilon(1e-12));
  CHECK(std::abs(r3.value[1] - 0.13) / 0.13 == Catch::Approx(0.2308).margin(1e-3));
  // the same edge at scale 8 quantizes much closer
  auto r4 = spiking_path_sum(q, value, 0, 8, 8.0, 4);
  CHECK(std::abs(r4.value[1] - 0.13) / 0.13 < 0.05);
}

TEST_CASE("unit saturation is flagged") {
  WeightedGraph parallel;
  parallel.nodes = 2;
  for (int i = 0; i < 3; ++i) parallel.edges.push_back({0, 1, 1, 0.1});
  auto value = [](const WeightedEdge& e) { return e.value; };
  auto r = spiking_path_sum(parallel, value, 0, 2, 1.0, 4);
  CHECK(r.saturated);
}

TEST_CASE("path-sum equals the quantized walk series exactly") {
  // the event simulation must reproduce the matrix series over quantized
  // values; any deviation means lost or double-counted paths
  Rng rng(41);
  const double grid[9] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nodes = 3 + rng.uniform_int(5);
    WeightedGraph g;
    g.nodes = nodes;
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t j = 0; j < nodes; ++j)
        if (i != j && rng.uniform() < 0.3)
          g.edges.push_back({i, j, 1, grid[rng.uniform_int(9)]});
    for (double scale : {2.0, 4.0, 8.0}) {
      auto quantized = [&](const WeightedEdge& e) {
        const double d = std::llround(-std::log10(e.value) * scale);
        return std::pow(10.0, -d / scale);
      };
      auto value = [](const WeightedEdge& e) { return e.value; };
      for (std::size_t x = 0; x < nodes; ++x) {
        auto got = spiking_path_sum(g, value, x, 4096, scale, 6);
        REQUIRE_FALSE(got.saturated);
        for (std::size_t y = 0; y < nodes; ++y) {
          const double want = brute_path_sum(g, quantized, x, y, 6);
          CHECK(got.value[y] == Catch::Approx(want).margin(1e-9));
        }
      }
    }
  }
}

TEST_CASE("quantization error decreases with delay scale on a fixed suite") {
  Rng rng(43);
  std::vector<double> med_err;
  for (double scale : {2.0, 4.0, 8.0}) {
    std::vector<double> errs;
    Rng local(43);
    for (int trial = 0; trial < 25; ++trial) {
      const std::size_t nodes = 4 + local.uniform_int(3);
      WeightedGraph g;
      g.nodes = nodes;
      const double grid[9] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
      for (std::size_t i = 0; i < nodes; ++i)
        for (std::size_t j = 0; j < nodes; ++j)
          if (i != j && local.uniform() < 0.15)
            g.edges.push_back({i, j, 1, grid[local.uniform_int(9)]});
      if (g.edges.empty()) g.edges.push_back({0, 1, 1, 0.3});
      auto value = [](const WeightedEdge& e) { return e.value; };
      double num = 0.0, den = 0.0;
      for (std::size_t x = 0; x < nodes; ++x) {
        auto got = spiking_path_sum(g, value, x, 4096, scale, 6);
        for (std::size_t y = 0; y < nodes; ++y) {
          const double want = brute_path_sum(g, value, x, y, 6);
          num += std::abs(got.value[y] - want);
          den += want;
        }
      }
      if (den > 0) errs.push_back(num / den);
    }
    std::sort(errs.begin(), errs.end());
    med_err.push_back(errs[errs.size() / 2]);
  }
  CHECK(med_err[0] >= med_err[1]);
  CHECK(med_err[1] >= med_err[2]);
  CHECK(med_err[2] < med_err[0]);
}
