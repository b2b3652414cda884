#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "grsnn/interpret.hpp"

using namespace grsnn;

namespace {

// relay fixture: chain x -> a -> b -> y plus a disconnected edge u -> v;
// after augmentation, inverse-relation delays are pushed past the horizon so
// only forward edges carry spikes
struct Relay {
  KnowledgeGraph kg;
  CompiledGraph graph;
  ModelConfig cfg;
  ParameterSet params;
  Triplet query;

  Relay() {
    cfg.steps = 10;
    cfg.channels = 2;
    cfg.head_hidden = 4;
    cfg.beta = 12.0;  // large bound: inverse delays can exceed the horizon

    kg.intern_entity("x");
    kg.intern_entity("a");
    kg.intern_entity("b");
    kg.intern_entity("y");
    kg.intern_entity("u");
    kg.intern_entity("v");
    kg.intern_relation("r");
    kg.edges.push_back({0, 0, 1});
    kg.edges.push_back({1, 0, 2});
    kg.edges.push_back({2, 0, 3});
    kg.edges.push_back({4, 0, 5});
    augment(kg);
    graph = CompiledGraph::from(kg);

    Rng rng(9);
    params = init_parameters(cfg, kg.num_relations(), rng);
    params.weight.fill(0.0);
    for (std::size_t c = 0; c < cfg.channels; ++c) params.weight(c, c) = 5.0;
    params.bias.assign(cfg.channels, 0.0);
    params.relation_embeddings.fill(0.0);
    for (std::size_t c = 0; c < cfg.channels; ++c) params.relation_embeddings(0, c) = 5.0;
    for (auto& m : params.delay_w) m.fill(0.0);
    // forward relation: near-zero delay; inverse relation: past the horizon
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      params.delay_b(0, c) = -8.0;   // latent ~ 0
      params.delay_b(1, c) = 8.0;    // latent ~ 12 > steps
    }
    query = {0, 0, 3};
  }
};

}  // namespace

TEST_CASE("gates of one leave the raster untouched") {
  Relay relay;
  auto plain = forward(relay.graph, {0, 0}, relay.params, relay.cfg);
  std::vector<double> gates(relay.graph.num_edges(), 1.0);
  auto gated = forward(relay.graph, {0, 0}, relay.params, relay.cfg, nullptr, &gates);
  CHECK(plain.spikes.a == gated.spikes.a);
  CHECK(plain.potential.a == gated.potential.a);
}

TEST_CASE("relay importance concentrates on the active path") {
  Relay relay;
  auto imp = edge_importance(relay.graph, relay.params, relay.cfg, relay.query);
  REQUIRE(imp.value.size() == relay.graph.num_edges());
  // forward chain edges (0,1,2) carry spikes toward y: nonzero importance
  CHECK(imp.value[0] != 0.0);
  CHECK(imp.value[1] != 0.0);
  CHECK(imp.value[2] != 0.0);
  // the disconnected edge and every inverse edge carried nothing
  CHECK(imp.value[3] == 0.0);
  for (std::size_t ei = 4; ei < relay.graph.num_edges(); ++ei)
    CHECK(imp.value[ei] == 0.0);
}

TEST_CASE("parallel duplicate edges share importance equally") {
  Relay relay;
  KnowledgeGraph kg2 = relay.kg;  // already augmented; build a fresh copy
  KnowledgeGraph kg;
  kg.intern_entity("x");
  kg.intern_entity("y");
  kg.intern_relation("r");
  kg.edges.push_back({0, 0, 1});
  kg.edges.push_back({0, 0, 1});  // duplicate
  augment(kg);
  auto graph = CompiledGraph::from(kg);
  ModelConfig cfg = relay.cfg;
  Rng rng(11);
  auto params = init_parameters(cfg, kg.num_relations(), rng);
  params.weight.fill(0.0);
  for (std::size_t c = 0; c < cfg.channels; ++c) params.weight(c, c) = 3.0;
  params.bias.assign(cfg.channels, 0.0);
  params.relation_embeddings.fill(0.0);
  for (std::size_t c = 0; c < cfg.channels; ++c) params.relation_embeddings(0, c) = 5.0;
  for (auto& m : params.delay_w) m.fill(0.0);
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    params.delay_b(0, c) = -8.0;
    params.delay_b(1, c) = 8.0;
  }
  auto imp = edge_importance(graph, params, cfg, {0, 0, 1});
  CHECK(imp.value[0] == Catch::Approx(imp.value[1]).margin(1e-12));
  CHECK(imp.value[0] != 0.0);
}

namespace {

std::vector<ReasoningPath> enumerate_paths(const EdgeImportance& imp, const CompiledGraph& g,
                                           std::size_t x, std::size_t y,
                                           std::size_t max_length) {
  std::vector<ReasoningPath> all;
  ReasoningPath cur;
  cur.node_sequence.push_back(x);
  std::function<void()> dfs = [&]() {
    const std::size_t at = cur.node_sequence.back();
    if (at == y && !cur.edge_indices.empty()) {
      all.push_back(cur);
      return;
    }
    if (cur.edge_indices.size() >= max_length) return;
    for (std::size_t ei : g.out[at]) {
      const std::size_t to = g.dst[ei];
      if (std::find(cur.node_sequence.begin(), cur.node_sequence.end(), to) !=
          cur.node_sequence.end())
        continue;
      cur.edge_indices.push_back(ei);
      cur.node_sequence.push_back(to);
      cur.importance += imp.value[ei];
      dfs();
      cur.importance -= imp.value[ei];
      cur.node_sequence.pop_back();
      cur.edge_indices.pop_back();
    }
  };
  dfs();
  std::sort(all.begin(), all.end(), detail::path_order);
  return all;
}

}  // namespace

TEST_CASE("single-path graph returns that path with summed importance") {
  Relay relay;
  auto imp = edge_importance(relay.graph, relay.params, relay.cfg, relay.query);
  auto paths = top_paths(imp, relay.graph, 0, 3, 2, 10, relay.cfg.steps);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].edge_indices == std::vector<std::size_t>{0, 1, 2});
  CHECK(paths[0].importance ==
        Catch::Approx(imp.value[0] + imp.value[1] + imp.value[2]).margin(1e-12));
}

TEST_CASE("wide beams reproduce exhaustive enumeration order") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + rng.uniform_int(5);  // up to 8 nodes
    CompiledGraph g;
    g.nodes = n;
    g.out.assign(n, {});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || rng.uniform() > 0.4) continue;
        g.out[i].push_back(g.src.size());
        g.src.push_back(i);
        g.dst.push_back(j);
        g.rel.push_back(0);
      }
    EdgeImportance imp;
    imp.value.resize(g.num_edges());
    for (auto& v : imp.value) v = rng.uniform(-1.0, 2.0);
    const std::size_t x = 0, y = n - 1, bound = 6;
    auto exhaustive = enumerate_paths(imp, g, x, y, bound);
    // beam wide enough that nothing is ever pruned
    std::size_t simple_paths_from_x = std::max<std::size_t>(exhaustive.size() * 8, 64);
    auto beamed = top_paths(imp, g, x, y, exhaustive.size(), simple_paths_from_x, bound);
    REQUIRE(beamed.size() == exhaustive.size());
    for (std::size_t i = 0; i < beamed.size(); ++i) {
      CHECK(beamed[i].edge_indices == exhaustive[i].edge_indices);
      CHECK(beamed[i].importance == Catch::Approx(exhaustive[i].importance).margin(1e-12));
    }
  }
}

TEST_CASE("narrow beams may miss; documented via the enumeration oracle") {
  // greedy-first-edge trap: the best path starts with the worse edge
  CompiledGraph g;
  g.nodes = 4;
  g.out.assign(4, {});
  auto add_edge = [&](std::size_t a, std::size_t b) {
    g.out[a].push_back(g.src.size());
    g.src.push_back(a);
    g.dst.push_back(b);
    g.rel.push_back(0);
  };
  add_edge(0, 1);  // edge 0: tempting start, dead-end value
  add_edge(0, 2);  // edge 1: worse start
  add_edge(1, 3);  // edge 2: weak finish
  add_edge(2, 3);  // edge 3: strong finish
  EdgeImportance imp;
  imp.value = {1.0, 0.5, 0.1, 3.0};
  auto wide = top_paths(imp, g, 0, 3, 2, 8, 4);
  REQUIRE(wide.size() == 2);
  CHECK(wide[0].edge_indices == std::vector<std::size_t>{1, 3});
  auto narrow = top_paths(imp, g, 0, 3, 1, 1, 4);
  REQUIRE(narrow.size() == 1);
  // the width-1 beam keeps only the greedy prefix and misses the best path
  CHECK(narrow[0].edge_indices == std::vector<std::size_t>{0, 2});
}

TEST_CASE("paths disconnected within the bound yield an empty result") {
  CompiledGraph g;
  g.nodes = 3;
  g.out.assign(3, {});
  g.out[0].push_back(0);
  g.src.push_back(0);
  g.dst.push_back(1);
  g.rel.push_back(0);
  EdgeImportance imp;
  imp.value = {1.0};
  CHECK(top_paths(imp, g, 0, 2, 3, 8, 5).empty());
  CHECK_THROWS_AS(top_paths(imp, g, 0, 1, 9, 8, 5), ContractError);
}

TEST_CASE("path text format") {
  Relay relay;
  auto imp = edge_importance(relay.graph, relay.params, relay.cfg, relay.query);
  auto paths = top_paths(imp, relay.graph, 0, 3, 1, 10, relay.cfg.steps);
  REQUIRE(paths.size() == 1);
  auto text = format_path(paths[0], relay.graph, relay.kg);
  CHECK(text.find("x(r)a(r)b(r)y") != std::string::npos);
  CHECK(text.find('\t') != std::string::npos);
}
