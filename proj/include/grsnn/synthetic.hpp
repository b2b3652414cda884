#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "grsnn/errors.hpp"
#include "grsnn/graph.hpp"
#include "grsnn/rng.hpp"

namespace grsnn {

// Composition benchmark: the target relation r3 holds between (a, c) exactly
// when some b links them through r1 followed by r2. Distractor edges use a
// fourth relation r0. Only r3 is split into train/valid/test; r0/r1/r2 stay
// in the fact graph.
struct CompositionSpec {
  std::size_t entities = 100;
  std::size_t r1_edges = 150;
  std::size_t r2_edges = 150;
  double distractor_fraction = 0.1;  // of the total r1+r2+r3 count
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  std::uint64_t seed = 1;
};

inline void write_composition_dataset(const CompositionSpec& spec,
                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Rng rng = substream(spec.seed, "data");
  const std::size_t V = spec.entities;

  auto ent = [](std::size_t i) { return "e" + std::to_string(i); };
  using Edge = std::pair<std::size_t, std::size_t>;
  auto sample_edges = [&](std::size_t count) {
    std::unordered_set<std::uint64_t> seen;
    std::vector<Edge> edges;
    while (edges.size() < count) {
      const std::size_t a = rng.uniform_int(V);
      const std::size_t b = rng.uniform_int(V);
      if (a == b) continue;
      const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
      if (!seen.insert(key).second) continue;
      edges.emplace_back(a, b);
    }
    return edges;
  };

  const auto r1 = sample_edges(spec.r1_edges);
  const auto r2 = sample_edges(spec.r2_edges);

  // r3 = all pairs connected head -(r1)-> mid -(r2)-> tail
  std::vector<std::vector<std::size_t>> r2_out(V);
  for (const auto& e : r2) r2_out[e.first].push_back(e.second);
  std::unordered_set<std::uint64_t> seen3;
  std::vector<Edge> r3;
  for (const auto& e1 : r1)
    for (std::size_t c : r2_out[e1.second]) {
      if (c == e1.first) continue;
      const std::uint64_t key = (static_cast<std::uint64_t>(e1.first) << 32) | c;
      if (seen3.insert(key).second) r3.emplace_back(e1.first, c);
    }
  if (r3.size() < 20) throw DataError("composition dataset too small; raise edge counts");

  const auto total = static_cast<double>(r1.size() + r2.size() + r3.size());
  const auto distractors =
      sample_edges(static_cast<std::size_t>(total * spec.distractor_fraction));

  // shuffle r3 and split
  std::vector<Edge> shuffled = r3;
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
  const auto n_train = static_cast<std::size_t>(shuffled.size() * spec.train_fraction);
  const auto n_valid = static_cast<std::size_t>(shuffled.size() * spec.valid_fraction);

  std::ofstream train(dir / "train.txt"), valid(dir / "valid.txt"), test(dir / "test.txt");
  if (!train || !valid || !test) throw DataError("cannot write dataset to " + dir.string());
  for (const auto& e : r1) train << ent(e.first) << "\tr1\t" << ent(e.second) << '\n';
  for (const auto& e : r2) train << ent(e.first) << "\tr2\t" << ent(e.second) << '\n';
  for (const auto& e : distractors) train << ent(e.first) << "\tr0\t" << ent(e.second) << '\n';
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    std::ofstream& out = i < n_train ? train : (i < n_train + n_valid ? valid : test);
    out << ent(shuffled[i].first) << "\tr3\t" << ent(shuffled[i].second) << '\n';
  }
}

// Small undirected homogeneous graph (both edge directions written) with an
// 85/5/10 edge split.
struct HomogeneousSpec {
  std::size_t nodes = 60;
  std::size_t undirected_edges = 140;
  std::uint64_t seed = 1;
};

inline void write_homogeneous_dataset(const HomogeneousSpec& spec,
                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Rng rng = substream(spec.seed, "data");
  const std::size_t V = spec.nodes;
  auto ent = [](std::size_t i) { return "n" + std::to_string(i); };

  std::unordered_set<std::uint64_t> seen;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  // a spanning ring keeps the graph connected
  for (std::size_t i = 0; i < V; ++i) {
    edges.emplace_back(i, (i + 1) % V);
    seen.insert((static_cast<std::uint64_t>(std::min(i, (i + 1) % V)) << 32) |
                std::max(i, (i + 1) % V));
  }
  while (edges.size() < spec.undirected_edges) {
    const std::size_t a = rng.uniform_int(V);
    const std::size_t b = rng.uniform_int(V);
    if (a == b) continue;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
    if (!seen.insert(key).second) continue;
    edges.emplace_back(a, b);
  }
  for (std::size_t i = edges.size(); i > 1; --i)
    std::swap(edges[i - 1], edges[rng.uniform_int(i)]);

  const auto n_train = static_cast<std::size_t>(edges.size() * 0.85);
  const auto n_valid = static_cast<std::size_t>(edges.size() * 0.05);
  std::ofstream train(dir / "train.txt"), valid(dir / "valid.txt"), test(dir / "test.txt");
  if (!train || !valid || !test) throw DataError("cannot write dataset to " + dir.string());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto [a, b] = edges[i];
    if (i < n_train) {
      // training edges participate in propagation: store both directions
      train << ent(a) << "\tlink\t" << ent(b) << '\n';
      train << ent(b) << "\tlink\t" << ent(a) << '\n';
    } else {
      std::ofstream& out = i < n_train + n_valid ? valid : test;
      out << ent(a) << "\tlink\t" << ent(b) << '\n';
    }
  }
}

}  // namespace grsnn
