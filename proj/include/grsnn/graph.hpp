#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "grsnn/errors.hpp"
#include "grsnn/rng.hpp"

namespace grsnn {

struct Triplet {
  std::size_t head = 0;
  std::size_t relation = 0;
  std::size_t tail = 0;

  bool operator==(const Triplet&) const = default;
};

struct TripletHash {
  std::size_t operator()(const Triplet& t) const {
    std::size_t h = t.head * 0x9e3779b97f4a7c15ULL;
    h ^= t.relation + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= t.tail + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

// Entity/relation vocabularies plus a directed typed multigraph. Ids are
// assigned in first-appearance order so runs are reproducible from the
// files alone.
struct KnowledgeGraph {
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::vector<Triplet> edges;
  bool augmented = false;
  std::size_t base_relations = 0;  // relation count before augmentation

  std::unordered_map<std::string, std::size_t> entity_ids;
  std::unordered_map<std::string, std::size_t> relation_ids;

  std::size_t num_entities() const { return entity_names.size(); }
  std::size_t num_relations() const { return relation_names.size(); }

  std::size_t intern_entity(const std::string& name) {
    auto it = entity_ids.find(name);
    if (it != entity_ids.end()) return it->second;
    entity_ids.emplace(name, entity_names.size());
    entity_names.push_back(name);
    return entity_names.size() - 1;
  }

  std::size_t intern_relation(const std::string& name) {
    auto it = relation_ids.find(name);
    if (it != relation_ids.end()) return it->second;
    relation_ids.emplace(name, relation_names.size());
    relation_names.push_back(name);
    return relation_names.size() - 1;
  }

  // per-node outgoing edge index (indices into `edges`)
  std::vector<std::vector<std::size_t>> out_index() const {
    std::vector<std::vector<std::size_t>> out(num_entities());
    for (std::size_t i = 0; i < edges.size(); ++i) out[edges[i].head].push_back(i);
    return out;
  }

  std::size_t inverse_relation(std::size_t r) const {
    if (!augmented) throw ContractError("inverse_relation: graph not augmented");
    return r < base_relations ? r + base_relations : r - base_relations;
  }
};

// One triplet per line: head<TAB>relation<TAB>tail. Lines starting with '#'
// are ignored. Vocabularies may be pre-seeded (inductive evaluation reuses
// the training relation vocabulary).
inline void load_triplets_into(KnowledgeGraph& g, const std::filesystem::path& path,
                               std::vector<Triplet>* sink = nullptr,
                               bool freeze_relations = false) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triplet file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::size_t parsed = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected head<TAB>relation<TAB>tail");
    }
    const std::string head = line.substr(0, tab1);
    const std::string rel = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string tail = line.substr(tab2 + 1);
    if (head.empty() || rel.empty() || tail.empty())
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty field");
    Triplet t;
    t.head = g.intern_entity(head);
    if (freeze_relations) {
      auto it = g.relation_ids.find(rel);
      if (it == g.relation_ids.end())
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": unknown relation '" + rel + "'");
      t.relation = it->second;
    } else {
      t.relation = g.intern_relation(rel);
    }
    t.tail = g.intern_entity(tail);
    (sink ? *sink : g.edges).push_back(t);
    ++parsed;
  }
  if (parsed == 0) throw DataError("no triplets in " + path.string());
}

inline KnowledgeGraph load_triplets(const std::filesystem::path& path) {
  KnowledgeGraph g;
  load_triplets_into(g, path);
  g.base_relations = g.num_relations();
  return g;
}

inline void save_triplets(const KnowledgeGraph& g, const std::vector<Triplet>& triplets,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& t : triplets)
    out << g.entity_names[t.head] << '\t' << g.relation_names[t.relation] << '\t'
        << g.entity_names[t.tail] << '\n';
}

// Knowledge-graph augmentation: every (x, q, y) gains (y, q^-1, x) under a
// fresh relation id; the relation vocabulary doubles.
inline void augment(KnowledgeGraph& g) {
  if (g.augmented) throw DataError("augment: graph already augmented");
  g.base_relations = g.num_relations();
  const std::size_t base = g.base_relations;
  for (std::size_t r = 0; r < base; ++r) g.intern_relation(g.relation_names[r] + "^-1");
  const std::size_t original_edges = g.edges.size();
  g.edges.reserve(2 * original_edges);
  for (std::size_t i = 0; i < original_edges; ++i) {
    const Triplet& t = g.edges[i];
    g.edges.push_back({t.tail, t.relation + base, t.head});
  }
  g.augmented = true;
}

// Homogeneous augmentation: a self-loop per node under a dedicated relation
// id, so loops can learn their own delay.
inline void augment_self_loops(KnowledgeGraph& g) {
  if (g.augmented) throw DataError("augment_self_loops: graph already augmented");
  g.base_relations = g.num_relations();
  const std::size_t loop_rel = g.intern_relation("__self_loop__");
  for (std::size_t v = 0; v < g.num_entities(); ++v) g.edges.push_back({v, loop_rel, v});
  g.augmented = true;
}

// Uniform endpoint corruption. Each negative differs from the positive in
// exactly one endpoint; collisions with true triplets are allowed during
// training (evaluation filters separately).
inline std::vector<Triplet> sample_negatives(const Triplet& positive, const KnowledgeGraph& g,
                                             std::size_t m, Rng& rng) {
  if (m < 1) throw ContractError("sample_negatives: m must be >= 1");
  const std::size_t V = g.num_entities();
  if (V < 2) throw DataError("sample_negatives: need at least two entities");
  std::vector<Triplet> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Triplet t = positive;
    const bool corrupt_head = rng.uniform_int(2) == 0;
    const std::size_t original = corrupt_head ? t.head : t.tail;
    std::size_t pick = rng.uniform_int(V - 1);
    if (pick >= original) ++pick;
    (corrupt_head ? t.head : t.tail) = pick;
    out.push_back(t);
  }
  return out;
}

// Masked adjacency: hides every edge whose endpoints match a query pair in
// either direction. The underlying graph is untouched.
class EdgeMask {
 public:
  EdgeMask() = default;

  static EdgeMask for_queries(const KnowledgeGraph& g,
                              const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    EdgeMask m;
    std::unordered_set<std::uint64_t> blocked;
    blocked.reserve(pairs.size() * 2);
    for (auto [x, y] : pairs) {
      blocked.insert(key(x, y));
      blocked.insert(key(y, x));
    }
    m.hidden_.assign(g.edges.size(), false);
    for (std::size_t i = 0; i < g.edges.size(); ++i)
      if (blocked.count(key(g.edges[i].head, g.edges[i].tail))) m.hidden_[i] = true;
    return m;
  }

  bool hidden(std::size_t edge_index) const {
    return !hidden_.empty() && hidden_[edge_index];
  }

  std::size_t hidden_count() const {
    return static_cast<std::size_t>(std::count(hidden_.begin(), hidden_.end(), true));
  }

 private:
  static std::uint64_t key(std::size_t a, std::size_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
  }
  std::vector<bool> hidden_;
};

enum class DatasetMode { kg_transductive, kg_inductive, homogeneous };

// train/valid/test query triplets; in inductive mode the evaluation facts
// form a separate graph over fresh entities sharing the relation vocabulary.
struct Split {
  KnowledgeGraph graph;  // training graph (train facts)
  std::vector<Triplet> train;
  std::vector<Triplet> valid;
  std::vector<Triplet> test;

  // inductive only: evaluation-time fact graph; test refers to its ids
  KnowledgeGraph eval_graph;
  bool inductive = false;
};

// Directory layout: train.txt / valid.txt / test.txt, plus facts.txt for
// the inductive fact graph.
inline Split load_split(const std::filesystem::path& dir, DatasetMode mode) {
  Split s;
  s.graph = load_triplets(dir / "train.txt");
  s.train = s.graph.edges;
  if (mode == DatasetMode::kg_inductive) {
    s.inductive = true;
    load_triplets_into(s.graph, dir / "valid.txt", &s.valid);
    // evaluation graph: disjoint entities, shared relation vocabulary
    s.eval_graph.relation_names = s.graph.relation_names;
    s.eval_graph.relation_ids = s.graph.relation_ids;
    load_triplets_into(s.eval_graph, dir / "facts.txt", nullptr, true);
    load_triplets_into(s.eval_graph, dir / "test.txt", &s.test, true);
    s.eval_graph.base_relations = s.eval_graph.num_relations();
    for (const auto& name : s.eval_graph.entity_names)
      if (s.graph.entity_ids.count(name))
        throw DataError("inductive split leaks entity '" + name + "' into evaluation");
  } else {
    load_triplets_into(s.graph, dir / "valid.txt", &s.valid);
    load_triplets_into(s.graph, dir / "test.txt", &s.test);
  }
  // query files may intern vocabulary entries of their own
  s.graph.base_relations = s.graph.num_relations();
  return s;
}

}  // namespace grsnn
