#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "grsnn/backward.hpp"
#include "grsnn/model.hpp"

namespace grsnn {

// Per-edge importance: gradient of the pre-sigmoid prediction logit with
// respect to a gate variable (1.0) multiplying each edge's transmitted
// spikes. Edges that carried no spike get exactly zero.
struct EdgeImportance {
  std::vector<double> value;  // parallel to the compiled graph's edges
  bool saturated_score = false;
};

inline EdgeImportance edge_importance(const CompiledGraph& graph, const ParameterSet& params,
                                      const ModelConfig& cfg, const Triplet& triplet,
                                      const EdgeMask* mask = nullptr) {
  std::vector<double> gates(graph.num_edges(), 1.0);
  QueryContext ctx{triplet.head, triplet.relation};
  auto tape = forward(graph, ctx, params, cfg, mask, &gates);

  auto h = decode(tape, triplet.tail, cfg.lambda);
  auto sc = score(params, h, ctx.relation);

  EdgeImportance result;
  result.value.assign(graph.num_edges(), 0.0);
  result.saturated_score = sc.p <= kProbClamp || sc.p >= 1.0 - kProbClamp;

  // seed with d(logit)/d(logit) = 1 on the prediction logit
  GradientSet scratch = GradientSet::zero_like(params);
  std::vector<double> dh;
  score_backward(params, h, ctx.relation, sc, 1.0, scratch, dh);
  Ten3 ds(tape.steps, tape.nodes, tape.channels);
  add_decode_gradient(ds, dh, triplet.tail, cfg.lambda);
  backward_simulation(tape, params, cfg, ds, SurrogateKind::interpretation, scratch,
                      &result.value);
  return result;
}

// Reasoning path: graph-adjacent edge list from the query head to the query
// tail; importance is the sum of member-edge importances.
struct ReasoningPath {
  std::vector<std::size_t> edge_indices;
  std::vector<std::size_t> node_sequence;  // length edges + 1, starts at x
  double importance = 0.0;
};

namespace detail {

inline bool path_order(const ReasoningPath& a, const ReasoningPath& b) {
  if (a.importance != b.importance) return a.importance > b.importance;
  if (a.node_sequence != b.node_sequence) return a.node_sequence < b.node_sequence;
  return a.edge_indices < b.edge_indices;
}

}  // namespace detail

// Beam search over acyclic paths ordered by cumulative edge importance.
// With beam_width at least the number of simple paths from x within the
// length bound, the result order equals exhaustive enumeration.
inline std::vector<ReasoningPath> top_paths(const EdgeImportance& importance,
                                            const CompiledGraph& graph, std::size_t x,
                                            std::size_t y, std::size_t k,
                                            std::size_t beam_width, std::size_t max_length) {
  if (k > beam_width) throw ContractError("top_paths: k must not exceed beam_width");
  std::vector<ReasoningPath> frontier;
  {
    ReasoningPath root;
    root.node_sequence.push_back(x);
    frontier.push_back(root);
  }
  std::vector<ReasoningPath> complete;
  for (std::size_t depth = 0; depth < max_length && !frontier.empty(); ++depth) {
    std::vector<ReasoningPath> next;
    for (const auto& path : frontier) {
      const std::size_t at = path.node_sequence.back();
      for (std::size_t ei : graph.out[at]) {
        const std::size_t to = graph.dst[ei];
        // acyclic: never revisit a node
        if (std::find(path.node_sequence.begin(), path.node_sequence.end(), to) !=
            path.node_sequence.end())
          continue;
        ReasoningPath ext = path;
        ext.edge_indices.push_back(ei);
        ext.node_sequence.push_back(to);
        ext.importance += importance.value[ei];
        if (to == y)
          complete.push_back(std::move(ext));
        else
          next.push_back(std::move(ext));
      }
    }
    std::sort(next.begin(), next.end(), detail::path_order);
    if (next.size() > beam_width) next.resize(beam_width);
    frontier = std::move(next);
  }
  std::sort(complete.begin(), complete.end(), detail::path_order);
  if (complete.size() > k) complete.resize(k);
  return complete;
}

// Text form: importance<TAB>node(relation)node(relation)...node
inline std::string format_path(const ReasoningPath& path, const CompiledGraph& graph,
                               const KnowledgeGraph& kg, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, path.importance);
  std::string out = buf;
  out += '\t';
  for (std::size_t i = 0; i < path.edge_indices.size(); ++i) {
    out += kg.entity_names[path.node_sequence[i]];
    out += '(';
    out += kg.relation_names[graph.rel[path.edge_indices[i]]];
    out += ')';
  }
  out += kg.entity_names[path.node_sequence.back()];
  return out;
}

}  // namespace grsnn
