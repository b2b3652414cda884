#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "grsnn/backward.hpp"
#include "grsnn/model.hpp"
#include "grsnn/rng.hpp"

namespace grsnn {

enum class CheckMode { soft_spike, continuous_delay };

// Small fixed problem: a random augmented KG, random parameters with enough
// injection to produce activity, one positive and two negative tails.
struct GradCheckInstance {
  CompiledGraph graph;
  ModelConfig cfg;
  ParameterSet params;
  QueryContext ctx;
  std::size_t pos_tail = 0;
  std::vector<std::size_t> neg_tails;
};

inline GradCheckInstance make_gradcheck_instance(std::uint64_t seed, std::size_t entities = 5) {
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  GradCheckInstance inst;
  inst.cfg.steps = 6;
  inst.cfg.channels = 4;
  inst.cfg.head_hidden = 6;
  inst.cfg.beta = 3.0;
  inst.cfg.lambda = 0.9;
  inst.cfg.tau_ratio = 4.0;
  inst.cfg.v_th = 2.0;
  inst.cfg.a1 = 0.25;
  inst.cfg.encoding = RelationEncoding::delay;

  KnowledgeGraph kg;
  for (std::size_t i = 0; i < entities; ++i) kg.intern_entity("e" + std::to_string(i));
  kg.intern_relation("r0");
  kg.intern_relation("r1");
  // random edges plus a guaranteed chain so spikes travel
  for (std::size_t i = 0; i + 1 < entities; ++i)
    kg.edges.push_back({i, rng.uniform_int(2), i + 1});
  for (int k = 0; k < 4; ++k) {
    const std::size_t a = rng.uniform_int(entities);
    const std::size_t b = rng.uniform_int(entities);
    if (a == b) continue;
    kg.edges.push_back({a, rng.uniform_int(2), b});
  }
  augment(kg);
  inst.graph = CompiledGraph::from(kg);

  inst.params = init_parameters(inst.cfg, kg.num_relations(), rng);
  // push injections toward the threshold so the network is not silent
  for (auto& v : inst.params.relation_embeddings.a) v *= 1.8;
  // nonzero bias exercises its gradient path
  for (auto& b : inst.params.bias) b = rng.uniform(-0.05, 0.15);

  inst.ctx.source = 0;
  inst.ctx.relation = rng.uniform_int(kg.num_relations());
  inst.pos_tail = 1 + rng.uniform_int(entities - 1);
  inst.neg_tails = {rng.uniform_int(entities), rng.uniform_int(entities)};
  return inst;
}

namespace detail {

// soft-spike checks freeze the quantized delay table, so the head tensors
// are excluded from the sweep there
inline std::vector<TensorView> checked_views(std::vector<TensorView> all, bool with_delay_head) {
  if (with_delay_head) return all;
  std::vector<TensorView> kept;
  for (auto& v : all)
    if (v.name.rfind("delay_", 0) != 0) kept.push_back(v);
  return kept;
}

}  // namespace detail

// Loss of the fixed instance under the given verification mode.
inline double gradcheck_loss(const GradCheckInstance& inst, const ParameterSet& params,
                             CheckMode mode) {
  std::vector<double> p_negs;
  double p_pos = 0.0;
  if (mode == CheckMode::soft_spike) {
    auto tape = forward(inst.graph, inst.ctx, params, inst.cfg, nullptr, nullptr, true);
    auto h = decode(tape, inst.pos_tail, inst.cfg.lambda);
    p_pos = score(params, h, inst.ctx.relation).p;
    for (auto t : inst.neg_tails) {
      auto hn = decode(tape, t, inst.cfg.lambda);
      p_negs.push_back(score(params, hn, inst.ctx.relation).p);
    }
  } else {
    auto tape = srm_forward(inst.graph, inst.ctx, params, inst.cfg);
    auto h = srm_decode(tape, inst.pos_tail, inst.cfg.lambda);
    p_pos = score(params, h, inst.ctx.relation).p;
    for (auto t : inst.neg_tails) {
      auto hn = srm_decode(tape, t, inst.cfg.lambda);
      p_negs.push_back(score(params, hn, inst.ctx.relation).p);
    }
  }
  return nll_loss(p_pos, p_negs).value;
}

// Analytic gradient of the same loss.
inline GradientSet gradcheck_analytic(const GradCheckInstance& inst, const ParameterSet& params,
                                      CheckMode mode) {
  GradientSet grads = GradientSet::zero_like(params);
  const std::size_t T = inst.cfg.steps;
  const std::size_t V = inst.graph.nodes;
  const std::size_t n = inst.cfg.channels;
  Ten3 ds(T, V, n);

  auto seed_candidate = [&](const std::vector<double>& h, double dloss_dp) {
    auto sc = score(params, h, inst.ctx.relation);
    const double dlogit = dloss_dp * sc.p * (1.0 - sc.p);
    std::vector<double> dh;
    score_backward(params, h, inst.ctx.relation, sc, dlogit, grads, dh);
    return dh;
  };

  if (mode == CheckMode::soft_spike) {
    auto tape = forward(inst.graph, inst.ctx, params, inst.cfg, nullptr, nullptr, true);
    auto h_pos = decode(tape, inst.pos_tail, inst.cfg.lambda);
    std::vector<std::vector<double>> h_negs;
    std::vector<double> p_negs;
    for (auto t : inst.neg_tails) {
      h_negs.push_back(decode(tape, t, inst.cfg.lambda));
      p_negs.push_back(score(params, h_negs.back(), inst.ctx.relation).p);
    }
    auto lr = nll_loss(score(params, h_pos, inst.ctx.relation).p, p_negs);
    auto dh = seed_candidate(h_pos, lr.d_pos);
    add_decode_gradient(ds, dh, inst.pos_tail, inst.cfg.lambda);
    for (std::size_t i = 0; i < inst.neg_tails.size(); ++i) {
      auto dhn = seed_candidate(h_negs[i], lr.d_negs[i]);
      add_decode_gradient(ds, dhn, inst.neg_tails[i], inst.cfg.lambda);
    }
    // frozen quantized delays: skip the relation-head chain so the result
    // stays finite-difference comparable
    backward_simulation(tape, params, inst.cfg, ds, SurrogateKind::sigmoid, grads, nullptr,
                        false);
  } else {
    auto tape = srm_forward(inst.graph, inst.ctx, params, inst.cfg);
    auto h_pos = srm_decode(tape, inst.pos_tail, inst.cfg.lambda);
    std::vector<std::vector<double>> h_negs;
    std::vector<double> p_negs;
    for (auto t : inst.neg_tails) {
      h_negs.push_back(srm_decode(tape, t, inst.cfg.lambda));
      p_negs.push_back(score(params, h_negs.back(), inst.ctx.relation).p);
    }
    auto lr = nll_loss(score(params, h_pos, inst.ctx.relation).p, p_negs);
    auto dh = seed_candidate(h_pos, lr.d_pos);
    add_decode_gradient(ds, dh, inst.pos_tail, inst.cfg.lambda);
    for (std::size_t i = 0; i < inst.neg_tails.size(); ++i) {
      auto dhn = seed_candidate(h_negs[i], lr.d_negs[i]);
      add_decode_gradient(ds, dhn, inst.neg_tails[i], inst.cfg.lambda);
    }
    srm_backward(tape, params, inst.cfg, ds, grads);
  }
  return grads;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
  bool finite = true;
};

// Central finite differences against the analytic reverse pass. Relative
// error per the |a - fd| / max(|a|, |fd|, 1e-12) rule for coordinates with
// appreciable magnitude; coordinates below 1e-8 must agree absolutely
// (double-precision difference noise dominates any ratio there).
inline GradCheckReport grad_check(const GradCheckInstance& inst, CheckMode mode,
                                  double eps = 1e-4) {
  ParameterSet params = inst.params;
  GradientSet analytic = gradcheck_analytic(inst, params, mode);
  if (!analytic.finite()) {
    GradCheckReport bad;
    bad.finite = false;
    bad.worst_parameter = "non-finite analytic gradient";
    bad.max_rel_error = std::numeric_limits<double>::infinity();
    return bad;
  }
  const bool with_delay_head = mode == CheckMode::continuous_delay;
  auto pviews = detail::checked_views(parameter_views(params), with_delay_head);
  auto gviews = detail::checked_views(gradient_views(analytic), with_delay_head);

  GradCheckReport report;
  for (std::size_t vi = 0; vi < pviews.size(); ++vi) {
    for (std::size_t i = 0; i < pviews[vi].size; ++i) {
      double& coord = pviews[vi].data[i];
      const double saved = coord;
      coord = saved + eps;
      const double up = gradcheck_loss(inst, params, mode);
      coord = saved - eps;
      const double down = gradcheck_loss(inst, params, mode);
      coord = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double a = gviews[vi].data[i];
      ++report.checked;
      double err;
      if (std::max(std::abs(a), std::abs(fd)) < 1e-8) {
        err = std::abs(a - fd) <= 1e-8 ? 0.0 : 1.0;
      } else {
        err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-12});
      }
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_parameter = pviews[vi].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace grsnn
