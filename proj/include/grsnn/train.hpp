#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "grsnn/backward.hpp"
#include "grsnn/eval.hpp"
#include "grsnn/graph.hpp"
#include "grsnn/model.hpp"
#include "grsnn/rng.hpp"

namespace grsnn {

struct TrainConfig {
  double lr = 2e-3;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::size_t negative_ratio = 32;
  bool self_adversarial = false;
  double adversarial_temperature = 1.0;
  std::uint64_t seed = 1;
  bool strip_query_edges = true;
  std::size_t valid_negative_ratio = 0;  // 0: full filtered validation ranking
  std::size_t workers = 1;
  std::string target_relation;  // restrict training queries to one relation

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("train: lr must be >= 0");
    if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
    if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    if (negative_ratio == 0) throw ConfigError("train: negative_ratio must be >= 1");
    if (workers == 0) throw ConfigError("train: workers must be >= 1");
    if (self_adversarial && !(adversarial_temperature > 0.0))
      throw ConfigError("train: adversarial temperature must be > 0");
  }
};

class Adam {
 public:
  Adam(double lr, std::size_t total) : lr_(lr), m_(total, 0.0), v_(total, 0.0) {}

  void step(const std::vector<TensorView>& params, const std::vector<TensorView>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::size_t off = 0;
    for (std::size_t vi = 0; vi < params.size(); ++vi) {
      double* p = params[vi].data;
      const double* g = grads[vi].data;
      for (std::size_t i = 0; i < params[vi].size; ++i, ++off) {
        m_[off] = beta1_ * m_[off] + (1.0 - beta1_) * g[i];
        v_[off] = beta2_ * v_[off] + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = m_[off] / bc1;
        const double vhat = v_[off] / bc2;
        p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

// One direction of a training example: a source simulation scored at the
// positive tail and a set of negative tails.
struct DirectionalExample {
  QueryContext ctx;
  std::size_t positive_tail = 0;
  std::vector<std::size_t> negative_tails;
};

// Loss and gradients of one directional example on one simulation.
inline double directional_loss_and_grads(const CompiledGraph& graph,
                                         const DirectionalExample& ex,
                                         const ParameterSet& params, const ModelConfig& cfg,
                                         const TrainConfig& tcfg, const EdgeMask* mask,
                                         GradientSet& grads) {
  auto tape = forward(graph, ex.ctx, params, cfg, mask);
  auto h_pos = decode(tape, ex.positive_tail, cfg.lambda);
  auto sc_pos = score(params, h_pos, ex.ctx.relation);

  std::vector<std::vector<double>> h_negs;
  std::vector<double> p_negs, logits;
  std::vector<ScoreResult> sc_negs;
  for (auto t : ex.negative_tails) {
    h_negs.push_back(decode(tape, t, cfg.lambda));
    sc_negs.push_back(score(params, h_negs.back(), ex.ctx.relation));
    p_negs.push_back(sc_negs.back().p);
    logits.push_back(sc_negs.back().logit);
  }

  LossResult lr;
  if (p_negs.empty()) {
    lr.value = -std::log(clamp_probability(sc_pos.p));
    lr.d_pos = -1.0 / clamp_probability(sc_pos.p);
  } else {
    lr = nll_loss(sc_pos.p, p_negs, tcfg.self_adversarial, tcfg.adversarial_temperature,
                  &logits);
  }

  Ten3 ds(tape.steps, tape.nodes, tape.channels);
  std::vector<double> dh;
  const double dlogit_pos = lr.d_pos * sc_pos.p * (1.0 - sc_pos.p);
  score_backward(params, h_pos, ex.ctx.relation, sc_pos, dlogit_pos, grads, dh);
  add_decode_gradient(ds, dh, ex.positive_tail, cfg.lambda);
  for (std::size_t i = 0; i < ex.negative_tails.size(); ++i) {
    const double dlogit = lr.d_negs[i] * sc_negs[i].p * (1.0 - sc_negs[i].p);
    score_backward(params, h_negs[i], ex.ctx.relation, sc_negs[i], dlogit, grads, dh);
    add_decode_gradient(ds, dh, ex.negative_tails[i], cfg.lambda);
  }
  backward_simulation(tape, params, cfg, ds, SurrogateKind::sigmoid, grads);
  return lr.value;
}

// Knowledge-graph example: the triplet trained in its forward direction plus
// the inverse direction, negatives split by which endpoint they corrupt.
inline double kg_example_loss_and_grads(const CompiledGraph& graph, const KnowledgeGraph& kg,
                                        const Triplet& positive,
                                        const std::vector<Triplet>& negatives,
                                        const ParameterSet& params, const ModelConfig& cfg,
                                        const TrainConfig& tcfg, const EdgeMask* mask,
                                        GradientSet& grads) {
  DirectionalExample fwd;
  fwd.ctx = {positive.head, positive.relation};
  fwd.positive_tail = positive.tail;
  DirectionalExample inv;
  inv.ctx = {positive.tail, kg.inverse_relation(positive.relation)};
  inv.positive_tail = positive.head;
  for (const auto& n : negatives) {
    if (n.head == positive.head)
      fwd.negative_tails.push_back(n.tail);
    else
      inv.negative_tails.push_back(n.head);
  }
  double loss = 0.0;
  loss += directional_loss_and_grads(graph, fwd, params, cfg, tcfg, mask, grads);
  loss += directional_loss_and_grads(graph, inv, params, cfg, tcfg, mask, grads);
  return loss;
}

// Symmetrized homogeneous score of a node pair: sigma(g(h(u,v) + h(v,u))).
// Tapes are simulated per distinct source on demand.
class PairScorer {
 public:
  PairScorer(const CompiledGraph& graph, const ParameterSet& params, const ModelConfig& cfg,
             std::size_t relation, const EdgeMask* mask = nullptr)
      : graph_(graph), params_(params), cfg_(cfg), relation_(relation), mask_(mask) {}

  const Tape& tape_for(std::size_t source) {
    for (auto& [src, tape] : tapes_)
      if (src == source) return tape;
    tapes_.emplace_back(source,
                        forward(graph_, {source, relation_}, params_, cfg_, mask_));
    return tapes_.back().second;
  }

  ScoreResult score_pair(std::size_t u, std::size_t v, std::vector<double>* h_out = nullptr) {
    auto hu = decode(tape_for(u), v, cfg_.lambda);
    auto hv = decode(tape_for(v), u, cfg_.lambda);
    for (std::size_t c = 0; c < hu.size(); ++c) hu[c] += hv[c];
    if (h_out != nullptr) *h_out = hu;
    return score(params_, hu, relation_);
  }

 private:
  const CompiledGraph& graph_;
  const ParameterSet& params_;
  const ModelConfig& cfg_;
  std::size_t relation_;
  const EdgeMask* mask_;
  std::deque<std::pair<std::size_t, Tape>> tapes_;  // deque: stable references
};

// Homogeneous example: symmetrized positive against endpoint-corrupted
// negatives, gradients flowing through both directions' simulations.
inline double homogeneous_example_loss_and_grads(const CompiledGraph& graph,
                                                 const Triplet& positive,
                                                 const std::vector<Triplet>& negatives,
                                                 const ParameterSet& params,
                                                 const ModelConfig& cfg,
                                                 const TrainConfig& tcfg, const EdgeMask* mask,
                                                 GradientSet& grads) {
  const std::size_t q = positive.relation;
  PairScorer scorer(graph, params, cfg, q, mask);

  std::vector<double> h_pos;
  auto sc_pos = scorer.score_pair(positive.head, positive.tail, &h_pos);
  std::vector<std::vector<double>> h_negs(negatives.size());
  std::vector<ScoreResult> sc_negs;
  std::vector<double> p_negs, logits;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    sc_negs.push_back(scorer.score_pair(negatives[i].head, negatives[i].tail, &h_negs[i]));
    p_negs.push_back(sc_negs.back().p);
    logits.push_back(sc_negs.back().logit);
  }
  auto lr = nll_loss(sc_pos.p, p_negs, tcfg.self_adversarial, tcfg.adversarial_temperature,
                     &logits);

  // one upstream-gradient tensor per cached simulation
  struct PendingDs {
    std::size_t source;
    Ten3 ds;
  };
  std::vector<PendingDs> pending;
  auto ds_for = [&](std::size_t source) -> Ten3& {
    for (auto& p : pending)
      if (p.source == source) return p.ds;
    pending.push_back({source, Ten3(cfg.steps, graph.nodes, cfg.channels)});
    return pending.back().ds;
  };
  std::vector<double> dh;
  auto seed_pair = [&](const Triplet& t, const std::vector<double>& h, const ScoreResult& sc,
                       double dp) {
    const double dlogit = dp * sc.p * (1.0 - sc.p);
    score_backward(params, h, q, sc, dlogit, grads, dh);
    // h = h(u->v) + h(v->u): the same dh flows to both decodes
    add_decode_gradient(ds_for(t.head), dh, t.tail, cfg.lambda);
    add_decode_gradient(ds_for(t.tail), dh, t.head, cfg.lambda);
  };
  seed_pair(positive, h_pos, sc_pos, lr.d_pos);
  for (std::size_t i = 0; i < negatives.size(); ++i)
    seed_pair(negatives[i], h_negs[i], sc_negs[i], lr.d_negs[i]);

  for (auto& p : pending)
    backward_simulation(scorer.tape_for(p.source), params, cfg, p.ds, SurrogateKind::sigmoid,
                        grads);
  return lr.value;
}

// Scores of (source, q, candidate) for every candidate tail, via one
// simulation.
inline std::vector<double> score_all_tails(const CompiledGraph& graph,
                                           const ParameterSet& params, const ModelConfig& cfg,
                                           std::size_t source, std::size_t relation) {
  auto tape = forward(graph, {source, relation}, params, cfg);
  std::vector<double> probs(graph.nodes, 0.0);
  for (std::size_t y = 0; y < graph.nodes; ++y)
    probs[y] = score(params, decode(tape, y, cfg.lambda), relation).p;
  return probs;
}

// Filtered (or sampled-negative) ranking over a query list. Both prediction
// directions are evaluated through inverse relations.
inline std::vector<RankRecord> rank_queries(const CompiledGraph& graph,
                                            const KnowledgeGraph& kg,
                                            const std::vector<Triplet>& queries,
                                            const ParameterSet& params, const ModelConfig& cfg,
                                            const TripletSet& known,
                                            std::size_t sampled_negatives, Rng& eval_rng,
                                            std::size_t workers = 1) {
  std::vector<RankRecord> records(queries.size() * 2);
  // negative draws must not depend on the worker count
  std::vector<std::uint64_t> per_query_seed(queries.size());
  for (auto& s : per_query_seed) s = eval_rng.next();

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Triplet& t = queries[i];
      auto tail_probs = score_all_tails(graph, params, cfg, t.head, t.relation);
      auto head_probs =
          score_all_tails(graph, params, cfg, t.tail, kg.inverse_relation(t.relation));
      auto score_tail = [&](std::size_t e) { return tail_probs[e]; };
      auto score_head = [&](std::size_t e) { return head_probs[e]; };
      if (sampled_negatives == 0) {
        auto [tail_rec, head_rec] =
            filtered_rank(score_tail, score_head, t, graph.nodes, known);
        records[2 * i] = tail_rec;
        records[2 * i + 1] = head_rec;
      } else {
        Rng rng(per_query_seed[i]);
        records[2 * i] =
            sampled_rank(score_tail, t, graph.nodes, known, sampled_negatives, rng);
        records[2 * i + 1] = sampled_rank(score_tail, t, graph.nodes, known,
                                          sampled_negatives, rng, true, score_head);
      }
    }
  };
  if (workers <= 1 || queries.size() < 2) {
    run_range(0, queries.size());
  } else {
    const std::size_t w = std::min(workers, queries.size());
    std::vector<std::thread> pool;
    const std::size_t chunk = (queries.size() + w - 1) / w;
    for (std::size_t k = 0; k < w; ++k) {
      const std::size_t lo = k * chunk;
      const std::size_t hi = std::min(queries.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return records;
}

inline double spike_rate_of(const Tape& tape) {
  double total = 0.0;
  for (double v : tape.spikes.a) total += v != 0.0 ? 1.0 : 0.0;
  return total / static_cast<double>(tape.spikes.a.size());
}

struct HomogeneousEval {
  double auroc = 0.0;
  double ap = 0.0;
  double mean_spike_rate = 0.0;
};

// Positive edges against an equal number of endpoint-corrupted negatives.
inline HomogeneousEval evaluate_homogeneous(const CompiledGraph& graph,
                                            const KnowledgeGraph& kg,
                                            const std::vector<Triplet>& positives,
                                            const ParameterSet& params, const ModelConfig& cfg,
                                            const TripletSet& known, Rng& eval_rng) {
  std::vector<double> pos_scores, neg_scores;
  PairScorer scorer(graph, params, cfg, positives.empty() ? 0 : positives[0].relation);
  double rate_sum = 0.0;
  std::size_t rate_count = 0;
  for (const auto& t : positives) {
    pos_scores.push_back(scorer.score_pair(t.head, t.tail).p);
    // draw one filtered negative per positive
    std::size_t guard = 0;
    while (guard++ < 10000) {
      Triplet n = t;
      const bool corrupt_head = eval_rng.uniform_int(2) == 0;
      std::size_t pick = eval_rng.uniform_int(kg.num_entities() - 1);
      const std::size_t original = corrupt_head ? n.head : n.tail;
      if (pick >= original) ++pick;
      (corrupt_head ? n.head : n.tail) = pick;
      if (known.count(n) || known.count({n.tail, n.relation, n.head})) continue;
      neg_scores.push_back(scorer.score_pair(n.head, n.tail).p);
      break;
    }
  }
  for (const auto& t : positives) {
    rate_sum += spike_rate_of(scorer.tape_for(t.head));
    ++rate_count;
  }
  auto [auroc, ap] = auroc_ap(pos_scores, neg_scores);
  return {auroc, ap, rate_count ? rate_sum / static_cast<double>(rate_count) : 0.0};
}

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_metric = 0.0;  // MRR (knowledge graphs) or AUROC (homogeneous)
};

struct TrainResult {
  ParameterSet best_params;
  ModelConfig cfg;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
};

// Adam training over the split's train triplets with per-epoch validation;
// the returned parameters are the best-validation snapshot.
inline TrainResult train(const Split& split, const KnowledgeGraph& augmented,
                         const CompiledGraph& graph, ModelConfig cfg, const TrainConfig& tcfg,
                         DatasetMode mode) {
  cfg.validate();
  tcfg.validate();
  cfg.homogeneous = mode == DatasetMode::homogeneous;

  Rng init_rng = substream(tcfg.seed, "init");
  ParameterSet params = init_parameters(cfg, augmented.num_relations(), init_rng);
  Rng neg_rng = substream(tcfg.seed, "negatives");

  // training queries (optionally restricted to a single relation)
  std::vector<Triplet> queries;
  if (!tcfg.target_relation.empty()) {
    auto it = augmented.relation_ids.find(tcfg.target_relation);
    if (it == augmented.relation_ids.end())
      throw ConfigError("train: unknown target relation '" + tcfg.target_relation + "'");
    for (const auto& t : split.train)
      if (t.relation == it->second) queries.push_back(t);
    if (queries.empty()) throw DataError("train: no queries with the target relation");
  } else {
    queries = split.train;
  }

  const TripletSet known = known_triplet_set(split);
  auto param_views = parameter_views(params);
  std::size_t total = 0;
  for (const auto& v : param_views) total += v.size;
  Adam opt(tcfg.lr, total);

  TrainResult result;
  result.cfg = cfg;
  result.best_params = params;
  result.best_epoch = 0;
  result.best_val = -1.0;

  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    // deterministic shuffle from the negatives stream
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[neg_rng.uniform_int(i)]);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + tcfg.batch_size);
      std::vector<Triplet> batch;
      std::vector<std::vector<Triplet>> batch_negs;
      std::vector<std::pair<std::size_t, std::size_t>> batch_pairs;
      for (std::size_t k = start; k < stop; ++k) {
        const Triplet& t = queries[order[k]];
        batch.push_back(t);
        batch_negs.push_back(sample_negatives(t, augmented, tcfg.negative_ratio, neg_rng));
        batch_pairs.emplace_back(t.head, t.tail);
      }
      EdgeMask mask;
      const EdgeMask* mask_ptr = nullptr;
      if (tcfg.strip_query_edges) {
        mask = EdgeMask::for_queries(augmented, batch_pairs);
        mask_ptr = &mask;
      }

      GradientSet batch_grads = GradientSet::zero_like(params);
      double batch_loss = 0.0;
      auto process_range = [&](std::size_t lo, std::size_t hi, GradientSet& grads,
                               double& loss_out) {
        for (std::size_t i = lo; i < hi; ++i) {
          if (mode == DatasetMode::homogeneous)
            loss_out += homogeneous_example_loss_and_grads(
                graph, batch[i], batch_negs[i], params, cfg, tcfg, mask_ptr, grads);
          else
            loss_out += kg_example_loss_and_grads(graph, augmented, batch[i], batch_negs[i],
                                                  params, cfg, tcfg, mask_ptr, grads);
        }
      };
      if (tcfg.workers <= 1 || batch.size() < 2) {
        process_range(0, batch.size(), batch_grads, batch_loss);
      } else {
        const std::size_t w = std::min(tcfg.workers, batch.size());
        const std::size_t chunk = (batch.size() + w - 1) / w;
        std::vector<GradientSet> worker_grads;
        std::vector<double> worker_loss(w, 0.0);
        for (std::size_t k = 0; k < w; ++k)
          worker_grads.push_back(GradientSet::zero_like(params));
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < w; ++k) {
          const std::size_t lo = k * chunk;
          const std::size_t hi = std::min(batch.size(), lo + chunk);
          if (lo >= hi) break;
          pool.emplace_back(process_range, lo, hi, std::ref(worker_grads[k]),
                            std::ref(worker_loss[k]));
        }
        for (auto& th : pool) th.join();
        for (std::size_t k = 0; k < w; ++k) {
          batch_grads.add(worker_grads[k]);
          batch_loss += worker_loss[k];
        }
      }

      if (!std::isfinite(batch_loss) || !batch_grads.finite())
        throw DivergenceError("non-finite loss or gradient in epoch " +
                              std::to_string(epoch));
      batch_grads.scale_by(1.0 / static_cast<double>(batch.size()));
      auto grad_views = gradient_views(batch_grads);
      opt.step(param_views, grad_views);
      epoch_loss += batch_loss;
      seen += batch.size();
    }
    epoch_loss /= static_cast<double>(std::max<std::size_t>(seen, 1));

    // validation metric
    double val = 0.0;
    if (!split.valid.empty()) {
      if (mode == DatasetMode::homogeneous) {
        Rng vrng = substream(tcfg.seed, "eval-negatives");
        val = evaluate_homogeneous(graph, augmented, split.valid, params, cfg, known, vrng)
                  .auroc;
      } else {
        Rng vrng = substream(tcfg.seed, "eval-negatives");
        auto records = rank_queries(graph, augmented, split.valid, params, cfg, known,
                                    tcfg.valid_negative_ratio, vrng, tcfg.workers);
        val = ranking_metrics(records).mrr;
      }
    }
    result.history.push_back({epoch, epoch_loss, val});
    if (val > result.best_val) {
      result.best_val = val;
      result.best_epoch = epoch;
      result.best_params = params;
    }
  }
  if (result.best_val < 0.0) {
    result.best_params = params;
    result.best_val = 0.0;
  }
  return result;
}

}  // namespace grsnn
