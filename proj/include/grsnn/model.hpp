#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "grsnn/autodiff.hpp"
#include "grsnn/errors.hpp"
#include "grsnn/graph.hpp"
#include "grsnn/rng.hpp"
#include "grsnn/snn.hpp"
#include "grsnn/tensor.hpp"

namespace grsnn {

enum class RelationEncoding { delay, weight, none };

inline RelationEncoding relation_encoding_from(const std::string& s) {
  if (s == "delay") return RelationEncoding::delay;
  if (s == "weight") return RelationEncoding::weight;
  if (s == "none") return RelationEncoding::none;
  throw ConfigError("unknown relation encoding '" + s + "'");
}

// Model hyperparameters. Defaults follow the knowledge-graph configuration
// (T=10 steps, 32 neurons per node, tau_m/dt=4, V_th=2, delay bound 4,
// decode lambda 0.95, surrogate scale 0.25).
struct ModelConfig {
  std::size_t steps = 10;       // T
  std::size_t channels = 32;    // neurons per graph node
  double tau_ratio = 4.0;
  double v_th = 2.0;
  double beta = 4.0;            // delay bound
  double lambda = 0.95;         // decode discount
  double a1 = 0.25;             // surrogate scale
  double scale = 1.0;           // post-W multiplier (0.1 for FB-style runs)
  std::size_t head_hidden = 64;
  RelationEncoding encoding = RelationEncoding::delay;
  bool homogeneous = false;     // delays from b_r only; symmetrized scoring

  NeuronParams neuron() const { return NeuronParams::make(tau_ratio, v_th); }
  KernelSpec kernel() const { return KernelSpec::make(tau_ratio); }
  SurrogateSpec surrogate() const { return SurrogateSpec::make(a1); }

  void validate() const {
    if (steps < 1) throw ConfigError("model: steps must be >= 1");
    if (channels < 1) throw ConfigError("model: channels must be >= 1");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("model: lambda in (0, 1]");
    if (!(beta >= 0.0)) throw ConfigError("model: beta must be >= 0");
    if (!(scale > 0.0)) throw ConfigError("model: scale must be > 0");
  }
};

// Everything trained: the shared synaptic transform, per-relation
// embeddings, the delay head (per-relation affine maps of the query
// embedding) and the scoring MLP.
struct ParameterSet {
  std::size_t channels = 0;
  std::size_t relations = 0;

  Mat weight;                         // n x n
  std::vector<double> bias;           // n
  Mat relation_embeddings;            // R x n
  std::vector<Mat> delay_w;           // R matrices, n x n
  Mat delay_b;                        // R x n
  Mat head_w1;                        // hidden x 2n
  std::vector<double> head_b1;        // hidden
  std::vector<double> head_w2;        // hidden
  double head_b2 = 0.0;
  double scale = 1.0;
};

inline ParameterSet init_parameters(const ModelConfig& cfg, std::size_t relations, Rng& rng) {
  const std::size_t n = cfg.channels;
  ParameterSet p;
  p.channels = n;
  p.relations = relations;
  p.scale = cfg.scale;
  const double wr = 1.0 / std::sqrt(static_cast<double>(n));
  p.weight = Mat(n, n);
  for (auto& v : p.weight.a) v = rng.uniform(-wr, wr);
  p.bias.assign(n, 0.0);
  // embeddings double as injection currents; fan-in 1 keeps a fraction of
  // channels super-threshold so early simulations are not silent
  p.relation_embeddings = Mat(relations, n);
  for (auto& v : p.relation_embeddings.a) v = rng.uniform(-1.0, 1.0);
  p.delay_w.assign(relations, Mat(n, n));
  for (auto& m : p.delay_w)
    for (auto& v : m.a) v = rng.uniform(-wr, wr);
  p.delay_b = Mat(relations, n);  // zero: initial delays sit at beta/2
  const std::size_t h = cfg.head_hidden;
  const double hr1 = 1.0 / std::sqrt(static_cast<double>(2 * n));
  const double hr2 = 1.0 / std::sqrt(static_cast<double>(h));
  p.head_w1 = Mat(h, 2 * n);
  for (auto& v : p.head_w1.a) v = rng.uniform(-hr1, hr1);
  p.head_b1.assign(h, 0.0);
  p.head_w2.assign(h, 0.0);
  for (auto& v : p.head_w2) v = rng.uniform(-hr2, hr2);
  p.head_b2 = 0.0;
  return p;
}

// Gradients, shape-congruent with ParameterSet.
struct GradientSet {
  Mat weight;
  std::vector<double> bias;
  Mat relation_embeddings;
  std::vector<Mat> delay_w;
  Mat delay_b;
  Mat head_w1;
  std::vector<double> head_b1;
  std::vector<double> head_w2;
  double head_b2 = 0.0;

  static GradientSet zero_like(const ParameterSet& p) {
    GradientSet g;
    g.weight = Mat(p.weight.rows, p.weight.cols);
    g.bias.assign(p.bias.size(), 0.0);
    g.relation_embeddings = Mat(p.relation_embeddings.rows, p.relation_embeddings.cols);
    g.delay_w.assign(p.delay_w.size(), Mat(p.channels, p.channels));
    g.delay_b = Mat(p.delay_b.rows, p.delay_b.cols);
    g.head_w1 = Mat(p.head_w1.rows, p.head_w1.cols);
    g.head_b1.assign(p.head_b1.size(), 0.0);
    g.head_w2.assign(p.head_w2.size(), 0.0);
    g.head_b2 = 0.0;
    return g;
  }

  void add(const GradientSet& o) {
    auto axpy = [](std::vector<double>& a, const std::vector<double>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    axpy(weight.a, o.weight.a);
    axpy(bias, o.bias);
    axpy(relation_embeddings.a, o.relation_embeddings.a);
    for (std::size_t r = 0; r < delay_w.size(); ++r) axpy(delay_w[r].a, o.delay_w[r].a);
    axpy(delay_b.a, o.delay_b.a);
    axpy(head_w1.a, o.head_w1.a);
    axpy(head_b1, o.head_b1);
    axpy(head_w2, o.head_w2);
    head_b2 += o.head_b2;
  }

  void scale_by(double f) {
    auto mul = [f](std::vector<double>& a) {
      for (auto& v : a) v *= f;
    };
    mul(weight.a);
    mul(bias);
    mul(relation_embeddings.a);
    for (auto& m : delay_w) mul(m.a);
    mul(delay_b.a);
    mul(head_w1.a);
    mul(head_b1);
    mul(head_w2);
    head_b2 *= f;
  }

  bool finite() const {
    auto ok = [](const std::vector<double>& a) {
      for (double v : a)
        if (!std::isfinite(v)) return false;
      return true;
    };
    if (!ok(weight.a) || !ok(bias) || !ok(relation_embeddings.a) || !ok(delay_b.a) ||
        !ok(head_w1.a) || !ok(head_b1) || !ok(head_w2) || !std::isfinite(head_b2))
      return false;
    for (const auto& m : delay_w)
      if (!ok(m.a)) return false;
    return true;
  }
};

// Flat named views over every trainable tensor, in a fixed order shared by
// the optimizer, the gradient checker and the checkpoint format.
struct TensorView {
  std::string name;
  double* data;
  std::size_t size;
};

inline std::vector<TensorView> parameter_views(ParameterSet& p) {
  std::vector<TensorView> v;
  v.push_back({"weight", p.weight.a.data(), p.weight.a.size()});
  v.push_back({"bias", p.bias.data(), p.bias.size()});
  v.push_back({"relation_embeddings", p.relation_embeddings.a.data(),
               p.relation_embeddings.a.size()});
  for (std::size_t r = 0; r < p.delay_w.size(); ++r)
    v.push_back({"delay_w[" + std::to_string(r) + "]", p.delay_w[r].a.data(),
                 p.delay_w[r].a.size()});
  v.push_back({"delay_b", p.delay_b.a.data(), p.delay_b.a.size()});
  v.push_back({"head_w1", p.head_w1.a.data(), p.head_w1.a.size()});
  v.push_back({"head_b1", p.head_b1.data(), p.head_b1.size()});
  v.push_back({"head_w2", p.head_w2.data(), p.head_w2.size()});
  v.push_back({"head_b2", &p.head_b2, 1});
  return v;
}

inline std::vector<TensorView> gradient_views(GradientSet& g) {
  std::vector<TensorView> v;
  v.push_back({"weight", g.weight.a.data(), g.weight.a.size()});
  v.push_back({"bias", g.bias.data(), g.bias.size()});
  v.push_back({"relation_embeddings", g.relation_embeddings.a.data(),
               g.relation_embeddings.a.size()});
  for (std::size_t r = 0; r < g.delay_w.size(); ++r)
    v.push_back({"delay_w[" + std::to_string(r) + "]", g.delay_w[r].a.data(),
                 g.delay_w[r].a.size()});
  v.push_back({"delay_b", g.delay_b.a.data(), g.delay_b.a.size()});
  v.push_back({"head_w1", g.head_w1.a.data(), g.head_w1.a.size()});
  v.push_back({"head_b1", g.head_b1.data(), g.head_b1.size()});
  v.push_back({"head_w2", g.head_w2.data(), g.head_w2.size()});
  v.push_back({"head_b2", &g.head_b2, 1});
  return v;
}

// Query-conditioned per-relation delay (or relation-weight) table, plus the
// pre-quantization values needed by the straight-through backward.
struct DelayTable {
  Mat values;  // R x n: integer delays (delay mode) or multiplicative weights
  Mat latent;  // delay mode: beta * sigmoid(logit) before quantization
  Mat logits;  // W_r r_q + b_r
};

inline DelayTable relation_delays(const ParameterSet& p, std::size_t q,
                                  const ModelConfig& cfg) {
  if (q >= p.relations) throw ContractError("relation_delays: relation out of range");
  const std::size_t R = p.relations;
  const std::size_t n = p.channels;
  DelayTable t;
  t.values = Mat(R, n);
  t.latent = Mat(R, n);
  t.logits = Mat(R, n);
  const double* rq = p.relation_embeddings.row(q);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double logit = p.delay_b(r, c);
      if (!cfg.homogeneous) {
        const double* wrow = p.delay_w[r].row(c);
        for (std::size_t k = 0; k < n; ++k) logit += wrow[k] * rq[k];
      }
      t.logits(r, c) = logit;
      if (cfg.encoding == RelationEncoding::weight) {
        t.values(r, c) = logit;  // relation-dependent synaptic weight, unbounded
        t.latent(r, c) = logit;
      } else {
        const double latent = cfg.beta * sigmoid(logit);
        t.latent(r, c) = latent;
        t.values(r, c) = quantize_delay(latent, cfg.beta);
      }
    }
  }
  return t;
}

// x: source entity; q: query relation; horizon T comes from the config.
struct QueryContext {
  std::size_t source = 0;
  std::size_t relation = 0;
};

// Simulation-ready adjacency built from an augmented knowledge graph.
struct CompiledGraph {
  std::size_t nodes = 0;
  std::vector<std::size_t> src, dst, rel;
  std::vector<std::vector<std::size_t>> out;  // edge indices per source node

  static CompiledGraph from(const KnowledgeGraph& g) {
    CompiledGraph c;
    c.nodes = g.num_entities();
    c.src.reserve(g.edges.size());
    c.out.assign(c.nodes, {});
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const auto& e = g.edges[i];
      c.src.push_back(e.head);
      c.rel.push_back(e.relation);
      c.dst.push_back(e.tail);
      c.out[e.head].push_back(i);
    }
    return c;
  }

  std::size_t num_edges() const { return src.size(); }
};

// Stored forward quantities for one query simulation: state rows for every
// discrete time plus the aggregated delayed inputs, consumed by the reverse
// pass. Row 0 is the rest state.
struct Tape {
  std::size_t steps = 0, nodes = 0, channels = 0;
  Ten3 current;    // I[t]
  Ten3 potential;  // u[t]
  Ten3 spikes;     // s[t] (0/1 hard, (0,1) soft)
  Ten3 agg;        // delayed aggregated input read at t (drives I[t+1])
  DelayTable table;
  QueryContext ctx;
  const CompiledGraph* graph = nullptr;
  const EdgeMask* mask = nullptr;
  const std::vector<double>* gates = nullptr;  // per-edge multipliers
  bool soft = false;
};

// Eq-style dynamics over the compiled graph: relation-delayed spike
// aggregation, shared linear transform, constant query current at the
// source. One run serves every candidate tail.
inline Tape forward(const CompiledGraph& g, const QueryContext& ctx, const ParameterSet& p,
                    const ModelConfig& cfg, const EdgeMask* mask = nullptr,
                    const std::vector<double>* gates = nullptr, bool soft = false) {
  cfg.validate();
  if (ctx.source >= g.nodes) throw ConfigError("forward: unknown source entity");
  if (p.channels != cfg.channels) throw ContractError("forward: parameter/config channels");
  if (gates != nullptr && gates->size() != g.num_edges())
    throw ContractError("forward: gate table size");

  const std::size_t T = cfg.steps;
  const std::size_t V = g.nodes;
  const std::size_t n = cfg.channels;
  const auto params = cfg.neuron();

  Tape tape;
  tape.steps = T;
  tape.nodes = V;
  tape.channels = n;
  tape.current = Ten3(T, V, n);
  tape.potential = Ten3(T, V, n);
  tape.spikes = Ten3(T, V, n);
  tape.agg = Ten3(T, V, n);
  tape.table = relation_delays(p, ctx.relation, cfg);
  tape.ctx = ctx;
  tape.graph = &g;
  tape.mask = mask;
  tape.gates = gates;
  tape.soft = soft;

  const bool delay_mode = cfg.encoding == RelationEncoding::delay;
  const bool weight_mode = cfg.encoding == RelationEncoding::weight;
  const auto max_delay = static_cast<std::size_t>(cfg.beta) + 1;
  DelayLine line(max_delay, V, n);
  const double* inj = p.relation_embeddings.row(ctx.relation);
  std::vector<double> message(n);

  for (std::size_t t = 0; t + 1 < T; ++t) {
    // route spikes emitted at t through their relation-conditioned delays
    const double* s_t = tape.spikes.slab(t);
    for (std::size_t z = 0; z < V; ++z) {
      const double* sz = s_t + z * n;
      bool any = false;
      for (std::size_t c = 0; c < n; ++c)
        if (sz[c] != 0.0) {
          any = true;
          break;
        }
      if (!any) continue;
      for (std::size_t ei : g.out[z]) {
        if (mask != nullptr && mask->hidden(ei)) continue;
        const double gate = gates != nullptr ? (*gates)[ei] : 1.0;
        if (gate == 0.0) continue;
        const std::size_t r = g.rel[ei];
        const std::size_t target = g.dst[ei];
        for (std::size_t c = 0; c < n; ++c) {
          const double sv = sz[c];
          if (sv == 0.0) continue;
          double value = sv * gate;
          std::size_t d = 0;
          if (delay_mode)
            d = static_cast<std::size_t>(tape.table.values(r, c));
          else if (weight_mode)
            value *= tape.table.values(r, c);
          line.push(t + d, target, c, value);
        }
      }
    }

    // read this step's arrivals, then advance every node one step
    double* agg_t = tape.agg.slab(t);
    for (std::size_t z = 0; z < V; ++z) {
      const double* arr = line.arrivals(t, z);
      for (std::size_t c = 0; c < n; ++c) agg_t[z * n + c] = arr[c];
    }
    line.retire(t);

    const double* I_t = tape.current.slab(t);
    const double* u_t = tape.potential.slab(t);
    double* I_next = tape.current.slab(t + 1);
    double* u_next = tape.potential.slab(t + 1);
    double* s_next = tape.spikes.slab(t + 1);
    for (std::size_t z = 0; z < V; ++z) {
      const double* az = agg_t + z * n;
      std::fill(message.begin(), message.end(), 0.0);
      matvec_accum(p.weight, az, message.data());
      const double* Iz = I_t + z * n;
      const double* uz = u_t + z * n;
      const double* sz = s_t + z * n;
      double* In = I_next + z * n;
      double* un = u_next + z * n;
      double* sn = s_next + z * n;
      const bool is_source = z == ctx.source;
      for (std::size_t c = 0; c < n; ++c) {
        In[c] = params.decay * Iz[c] + params.alpha * (p.scale * message[c] + p.bias[c]);
        un[c] = params.decay * uz[c] * (1.0 - sz[c]) + In[c] + (is_source ? inj[c] : 0.0);
        sn[c] = soft ? soft_spike(un[c], params.v_th, cfg.a1)
                     : (un[c] >= params.v_th ? 1.0 : 0.0);
      }
    }
  }
  return tape;
}

inline SpikeRaster to_raster(const Tape& tape) {
  SpikeRaster r(tape.steps, tape.nodes, tape.channels);
  for (std::size_t t = 0; t < tape.steps; ++t)
    for (std::size_t z = 0; z < tape.nodes; ++z)
      for (std::size_t c = 0; c < tape.channels; ++c)
        r.set(t, z, c, tape.spikes(t, z, c) != 0.0);
  return r;
}

// Temporal decode: h = (sum_t lambda^t s[t]) / (sum_t lambda^t), weighting
// early spikes more.
inline std::vector<double> decode(const Tape& tape, std::size_t node, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("decode: lambda in (0, 1]");
  const std::size_t T = tape.steps;
  const std::size_t n = tape.channels;
  std::vector<double> h(n, 0.0);
  double z = 0.0, w = 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double* s = tape.spikes.slab(t) + node * n;
    for (std::size_t c = 0; c < n; ++c) h[c] += w * s[c];
    z += w;
    w *= lambda;
  }
  for (auto& v : h) v /= z;
  return h;
}

inline double decode_normalizer(std::size_t steps, double lambda) {
  double z = 0.0, w = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    z += w;
    w *= lambda;
  }
  return z;
}

inline std::vector<double> decode_spike_raster(const SpikeRaster& r, std::size_t node,
                                               double lambda) {
  std::vector<double> h(r.channels, 0.0);
  double z = 0.0, w = 1.0;
  for (std::size_t t = 0; t < r.steps; ++t) {
    for (std::size_t c = 0; c < r.channels; ++c) h[c] += w * r.at(t, node, c);
    z += w;
    w *= lambda;
  }
  for (auto& v : h) v /= z;
  return h;
}

// Two-layer scoring head over [h ; r_q]. Keeps the hidden pre-activation so
// the backward pass can recompute the ReLU mask.
struct ScoreResult {
  double logit = 0.0;
  double p = 0.5;
  std::vector<double> hidden_pre;
};

inline ScoreResult score(const ParameterSet& p, const std::vector<double>& h, std::size_t q) {
  const std::size_t n = p.channels;
  if (h.size() != n) throw ContractError("score: representation length");
  const std::size_t hid = p.head_b1.size();
  ScoreResult out;
  out.hidden_pre.assign(hid, 0.0);
  const double* rq = p.relation_embeddings.row(q);
  for (std::size_t i = 0; i < hid; ++i) {
    const double* w = p.head_w1.row(i);
    double acc = p.head_b1[i];
    for (std::size_t c = 0; c < n; ++c) acc += w[c] * h[c];
    for (std::size_t c = 0; c < n; ++c) acc += w[n + c] * rq[c];
    out.hidden_pre[i] = acc;
  }
  double logit = p.head_b2;
  for (std::size_t i = 0; i < hid; ++i)
    if (out.hidden_pre[i] > 0.0) logit += p.head_w2[i] * out.hidden_pre[i];
  out.logit = logit;
  out.p = sigmoid(logit);
  return out;
}

// Reverse of score(): accumulates head gradients, returns d/dh and adds the
// query-embedding part into the embedding gradient row.
inline void score_backward(const ParameterSet& p, const std::vector<double>& h, std::size_t q,
                           const ScoreResult& fwd, double dlogit, GradientSet& grads,
                           std::vector<double>& dh) {
  const std::size_t n = p.channels;
  const std::size_t hid = p.head_b1.size();
  dh.assign(n, 0.0);
  const double* rq = p.relation_embeddings.row(q);
  double* drq = grads.relation_embeddings.row(q);
  grads.head_b2 += dlogit;
  for (std::size_t i = 0; i < hid; ++i) {
    if (fwd.hidden_pre[i] <= 0.0) continue;
    grads.head_w2[i] += dlogit * fwd.hidden_pre[i];
    const double dpre = dlogit * p.head_w2[i];
    grads.head_b1[i] += dpre;
    double* gw = grads.head_w1.row(i);
    const double* w = p.head_w1.row(i);
    for (std::size_t c = 0; c < n; ++c) {
      gw[c] += dpre * h[c];
      gw[n + c] += dpre * rq[c];
      dh[c] += dpre * w[c];
      drq[c] += dpre * w[n + c];
    }
  }
}

constexpr double kProbClamp = 1e-7;

inline double clamp_probability(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

// Negative log-likelihood of one positive against m negatives. With
// self-adversarial weighting the uniform 1/m is replaced by a softmax over
// the negative logits at the given temperature (weights treated as
// constants during backprop).
struct LossResult {
  double value = 0.0;
  double d_pos = 0.0;               // dL/dp_pos
  std::vector<double> d_negs;       // dL/dp_neg_i
};

// dL/dh -> dL/ds rows of the decoded node.
inline void add_decode_gradient(Ten3& ds, const std::vector<double>& dh, std::size_t node,
                                double lambda) {
  const std::size_t T = ds.d0;
  const std::size_t n = ds.d2;
  const double z = decode_normalizer(T, lambda);
  double w = 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    double* row = ds.slab(t) + node * n;
    for (std::size_t c = 0; c < n; ++c) row[c] += dh[c] * w / z;
    w *= lambda;
  }
}

inline LossResult nll_loss(double p_pos, const std::vector<double>& p_negs,
                           bool self_adversarial = false, double temperature = 1.0,
                           const std::vector<double>* neg_logits = nullptr) {
  if (p_negs.empty()) throw ContractError("nll_loss: no negatives in batch");
  const std::size_t m = p_negs.size();
  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  if (self_adversarial) {
    if (neg_logits == nullptr || neg_logits->size() != m)
      throw ContractError("nll_loss: adversarial weighting needs negative logits");
    if (!(temperature > 0.0)) throw ConfigError("nll_loss: temperature must be > 0");
    double mx = (*neg_logits)[0];
    for (double l : *neg_logits) mx = std::max(mx, l);
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      w[i] = std::exp(((*neg_logits)[i] - mx) / temperature);
      z += w[i];
    }
    for (auto& v : w) v /= z;
  }
  LossResult out;
  out.d_negs.assign(m, 0.0);
  const double cp = clamp_probability(p_pos);
  out.value = -std::log(cp);
  out.d_pos = (p_pos > kProbClamp && p_pos < 1.0 - kProbClamp) ? -1.0 / cp : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double cn = clamp_probability(p_negs[i]);
    out.value -= w[i] * std::log(1.0 - cn);
    out.d_negs[i] = (p_negs[i] > kProbClamp && p_negs[i] < 1.0 - kProbClamp)
                        ? w[i] / (1.0 - cn)
                        : 0.0;
  }
  return out;
}

}  // namespace grsnn
