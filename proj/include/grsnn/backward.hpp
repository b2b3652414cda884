#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "grsnn/model.hpp"

namespace grsnn {

enum class SurrogateKind {
  sigmoid,        // training surrogate; exact derivative in soft-spike mode
  interpretation  // 0 below threshold, 1/u at or above
};

inline double spike_derivative(double u, const NeuronParams& p, double a1, SurrogateKind kind) {
  if (kind == SurrogateKind::interpretation)
    return u >= p.v_th ? 1.0 / u : 0.0;
  return surrogate_grad(u, p.v_th, SurrogateSpec{a1});
}

// Reverse sweep over the unrolled simulation. ds_direct carries dL/ds[t] for
// every time/node/channel (decode and any direct raster losses). Gradients
// accumulate into `grads`; per-edge gate gradients land in `gate_grads` when
// given. Relation-head chains (delay or weight tables) can be disabled so
// finite-difference checks with frozen tables stay meaningful.
inline void backward_simulation(const Tape& tape, const ParameterSet& p, const ModelConfig& cfg,
                                const Ten3& ds_direct, SurrogateKind kind, GradientSet& grads,
                                std::vector<double>* gate_grads = nullptr,
                                bool relation_head = true) {
  const std::size_t T = tape.steps;
  const std::size_t V = tape.nodes;
  const std::size_t n = tape.channels;
  require_shape(ds_direct.d0 == T && ds_direct.d1 == V && ds_direct.d2 == n,
                "backward: upstream gradient shape");
  const CompiledGraph& g = *tape.graph;
  const auto params = cfg.neuron();
  const double decay = params.decay;
  const double alpha = params.alpha;
  const bool delay_mode = cfg.encoding == RelationEncoding::delay;
  const bool weight_mode = cfg.encoding == RelationEncoding::weight;

  Ten3 ds = ds_direct;                 // accumulates scattered contributions
  Ten3 du_spike(T, V, n);              // spike-path potential gradient, kept for delay traces
  std::vector<double> carry_du(V * n, 0.0), carry_dI(V * n, 0.0);
  std::vector<double> dagg(V * n, 0.0), dmessage(n, 0.0);
  Mat dtable(p.relations, n);          // delay-mode dd or weight-mode dw per (relation, channel)
  double* drq = grads.relation_embeddings.row(tape.ctx.relation);

  for (std::size_t t = T; t-- > 1;) {
    const double* u_t = tape.potential.slab(t);
    const double* s_t = tape.spikes.slab(t);
    // state recurrences
    for (std::size_t z = 0; z < V; ++z) {
      const bool is_source = z == tape.ctx.source;
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t i = z * n + c;
        const double u = u_t[i];
        double ds_tot = ds(t, z, c) + carry_du[i] * (-decay * u);
        const double sg = spike_derivative(u, params, cfg.a1, kind);
        const double duS = ds_tot * sg;
        du_spike(t, z, c) = duS;
        const double du = duS + carry_du[i] * decay * (1.0 - s_t[i]);
        if (is_source) drq[c] += du;  // constant injection, one term per step
        const double dI = du + carry_dI[i] * decay;
        carry_du[i] = du;
        carry_dI[i] = dI;
      }
    }

    // I[t] = decay I[t-1] + alpha (scale * W * agg[t-1] + b)
    const double* agg_prev = tape.agg.slab(t - 1);
    std::fill(dagg.begin(), dagg.end(), 0.0);
    for (std::size_t z = 0; z < V; ++z) {
      for (std::size_t c = 0; c < n; ++c) dmessage[c] = alpha * carry_dI[z * n + c];
      for (std::size_t c = 0; c < n; ++c) {
        grads.bias[c] += dmessage[c];
        const double dmc = p.scale * dmessage[c];
        if (dmc != 0.0) {
          double* gw = grads.weight.row(c);
          const double* av = agg_prev + z * n;
          for (std::size_t k = 0; k < n; ++k) gw[k] += dmc * av[k];
        }
      }
      // dagg = scale * W^T dmessage
      double* da = dagg.data() + z * n;
      for (std::size_t c = 0; c < n; ++c) {
        const double dmc = p.scale * dmessage[c];
        if (dmc == 0.0) continue;
        const double* wr = p.weight.row(c);
        for (std::size_t k = 0; k < n; ++k) da[k] += wr[k] * dmc;
      }
    }

    // scatter the read gradient to presynaptic spikes at their emission times
    const std::size_t t_read = t - 1;
    for (std::size_t ei = 0; ei < g.num_edges(); ++ei) {
      if (tape.mask != nullptr && tape.mask->hidden(ei)) continue;
      const double gate = tape.gates != nullptr ? (*tape.gates)[ei] : 1.0;
      const std::size_t k = g.src[ei];
      const std::size_t z = g.dst[ei];
      const std::size_t r = g.rel[ei];
      const double* da = dagg.data() + z * n;
      for (std::size_t c = 0; c < n; ++c) {
        const double dval = da[c];
        if (dval == 0.0) continue;
        std::size_t t_emit = t_read;
        double factor = gate;
        if (delay_mode) {
          const auto d = static_cast<std::size_t>(tape.table.values(r, c));
          if (d > t_read) continue;
          t_emit = t_read - d;
        } else if (weight_mode) {
          factor *= tape.table.values(r, c);
        }
        const double s_src = tape.spikes(t_emit, k, c);
        ds(t_emit, k, c) += dval * factor;
        if (gate_grads != nullptr && s_src != 0.0) {
          double dg = dval * s_src;
          if (weight_mode) dg *= tape.table.values(r, c);
          (*gate_grads)[ei] += dg;
        }
        if (weight_mode && relation_head && s_src != 0.0)
          dtable(r, c) += dval * gate * s_src;
      }
    }
  }

  // delay gradients: pair the spike-path potential gradient with the kernel
  // derivative trace of each edge's (delayed) source train
  if (delay_mode && relation_head) {
    const double rho = decay;
    const double tr_scale = cfg.tau_ratio;
    // Q[t][z] = scale * W^T du_spike[t][z]
    Ten3 Q(T, V, n);
    for (std::size_t t = 1; t < T; ++t)
      for (std::size_t z = 0; z < V; ++z) {
        const double* dus = du_spike.slab(t) + z * n;
        double* q = Q.slab(t) + z * n;
        for (std::size_t c = 0; c < n; ++c) {
          const double v = p.scale * dus[c];
          if (v == 0.0) continue;
          const double* wr = p.weight.row(c);
          for (std::size_t k = 0; k < n; ++k) q[k] += wr[k] * v;
        }
      }
    std::vector<double> A(n), B(n);
    for (std::size_t ei = 0; ei < g.num_edges(); ++ei) {
      if (tape.mask != nullptr && tape.mask->hidden(ei)) continue;
      const double gate = tape.gates != nullptr ? (*tape.gates)[ei] : 1.0;
      if (gate == 0.0) continue;
      const std::size_t k = g.src[ei];
      const std::size_t z = g.dst[ei];
      const std::size_t r = g.rel[ei];
      std::fill(A.begin(), A.end(), 0.0);
      std::fill(B.begin(), B.end(), 0.0);
      for (std::size_t t_read = 0; t_read + 1 < T; ++t_read) {
        const double* q = Q.slab(t_read + 1) + z * n;
        for (std::size_t c = 0; c < n; ++c) {
          const auto d = static_cast<std::size_t>(tape.table.values(r, c));
          const double shat = t_read >= d ? tape.spikes(t_read - d, k, c) : 0.0;
          A[c] = rho * A[c] + shat;
          B[c] = rho * B[c] + A[c];
          const double trace = alpha * (B[c] / tr_scale - A[c]);
          dtable(r, c) += q[c] * trace * gate;
        }
      }
    }
  }

  // chain the relation table back to the delay head and the query embedding
  if (relation_head && (delay_mode || weight_mode)) {
    const double* rq = p.relation_embeddings.row(tape.ctx.relation);
    for (std::size_t r = 0; r < p.relations; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        double dlogit = dtable(r, c);
        if (dlogit == 0.0) continue;
        if (delay_mode) {
          // straight-through to the latent, then through beta * sigmoid
          const double sg = sigmoid(tape.table.logits(r, c));
          dlogit *= cfg.beta * sg * (1.0 - sg);
        }
        grads.delay_b(r, c) += dlogit;
        if (!cfg.homogeneous) {
          double* gw = grads.delay_w[r].row(c);
          const double* wr = p.delay_w[r].row(c);
          for (std::size_t kk = 0; kk < n; ++kk) {
            gw[kk] += dlogit * rq[kk];
            drq[kk] += dlogit * wr[kk];
          }
        }
      }
    }
  }
}

// --- continuous-delay verification forward/backward -----------------------
//
// Response-kernel form of the dynamics with real-valued delays and soft
// spikes: the synaptic drive is the kernel convolution of presynaptic
// trains, the reset is an exponential kernel over own spikes, bias and
// injection enter through their accumulated step responses. Differentiable
// in every parameter including the delays; exists to make the delay
// gradients falsifiable against finite differences.

struct SrmTape {
  std::size_t steps = 0, nodes = 0, channels = 0;
  Ten3 potential;  // u[t]
  Ten3 spikes;     // s[t], soft
  Ten3 filtered;   // per-node aggregated kernel-filtered input (pre-W)
  Mat delays;      // R x n, real
  Mat logits;      // R x n
  QueryContext ctx;
  const CompiledGraph* graph = nullptr;
  const EdgeMask* mask = nullptr;
};

inline SrmTape srm_forward(const CompiledGraph& g, const QueryContext& ctx,
                           const ParameterSet& p, const ModelConfig& cfg,
                           const EdgeMask* mask = nullptr) {
  cfg.validate();
  if (cfg.encoding != RelationEncoding::delay)
    throw ContractError("srm_forward: continuous-delay mode requires delay encoding");
  const std::size_t T = cfg.steps;
  const std::size_t V = g.nodes;
  const std::size_t n = cfg.channels;
  const auto params = cfg.neuron();
  const auto kernel = cfg.kernel();

  SrmTape tape;
  tape.steps = T;
  tape.nodes = V;
  tape.channels = n;
  tape.potential = Ten3(T, V, n);
  tape.spikes = Ten3(T, V, n);
  tape.filtered = Ten3(T, V, n);
  tape.ctx = ctx;
  tape.graph = &g;
  tape.mask = mask;

  // real-valued delay table: beta * sigmoid(logit), no quantization
  tape.delays = Mat(p.relations, n);
  tape.logits = Mat(p.relations, n);
  const double* rq = p.relation_embeddings.row(ctx.relation);
  for (std::size_t r = 0; r < p.relations; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double logit = p.delay_b(r, c);
      if (!cfg.homogeneous) {
        const double* wrow = p.delay_w[r].row(c);
        for (std::size_t k = 0; k < n; ++k) logit += wrow[k] * rq[k];
      }
      tape.logits(r, c) = logit;
      tape.delays(r, c) = cfg.beta * sigmoid(logit);
    }

  // step responses of bias (through the kernel) and injection (through the
  // potential decay)
  std::vector<double> cum_kappa(T, 0.0), cum_rho(T, 0.0);
  for (std::size_t t = 1; t < T; ++t) {
    cum_kappa[t] = cum_kappa[t - 1] + kernel.kappa(static_cast<double>(t - 1));
    cum_rho[t] = cum_rho[t - 1] * params.decay + 1.0;
  }

  const double* inj = p.relation_embeddings.row(ctx.relation);
  std::vector<double> drive(n);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t z = 0; z < V; ++z) {
      // kernel-filtered presynaptic input
      double* R = tape.filtered.slab(t) + z * n;
      for (std::size_t c = 0; c < n; ++c) R[c] = 0.0;
      for (std::size_t ei = 0; ei < g.num_edges(); ++ei) {
        if (g.dst[ei] != z) continue;
        if (mask != nullptr && mask->hidden(ei)) continue;
        const std::size_t k = g.src[ei];
        const std::size_t r = g.rel[ei];
        for (std::size_t c = 0; c < n; ++c) {
          const double d = tape.delays(r, c);
          double acc = 0.0;
          for (std::size_t ts = 0; ts + 1 < t; ++ts) {
            const double s = tape.spikes(ts, k, c);
            if (s == 0.0) continue;
            acc += kernel.kappa(static_cast<double>(t - 1 - ts) - d) * s;
          }
          R[c] += acc;
        }
      }
      std::fill(drive.begin(), drive.end(), 0.0);
      matvec_accum(p.weight, R, drive.data());
      double* u = tape.potential.slab(t) + z * n;
      double* s = tape.spikes.slab(t) + z * n;
      const bool is_source = z == ctx.source;
      for (std::size_t c = 0; c < n; ++c) {
        double reset = 0.0;
        double w = params.decay;
        for (std::size_t tr = t; tr-- > 1;) {
          reset -= params.v_th * w * tape.spikes(tr, z, c);
          w *= params.decay;
        }
        u[c] = p.scale * drive[c] + p.bias[c] * cum_kappa[t] +
               (is_source ? inj[c] * cum_rho[t] : 0.0) + reset;
        s[c] = soft_spike(u[c], params.v_th, cfg.a1);
      }
    }
  }
  return tape;
}

inline std::vector<double> srm_decode(const SrmTape& tape, std::size_t node, double lambda) {
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

inline void srm_backward(const SrmTape& tape, const ParameterSet& p, const ModelConfig& cfg,
                         const Ten3& ds_direct, GradientSet& grads) {
  const std::size_t T = tape.steps;
  const std::size_t V = tape.nodes;
  const std::size_t n = tape.channels;
  require_shape(ds_direct.d0 == T && ds_direct.d1 == V && ds_direct.d2 == n,
                "srm_backward: upstream gradient shape");
  const CompiledGraph& g = *tape.graph;
  const auto params = cfg.neuron();
  const auto kernel = cfg.kernel();

  std::vector<double> cum_kappa(T, 0.0), cum_rho(T, 0.0);
  for (std::size_t t = 1; t < T; ++t) {
    cum_kappa[t] = cum_kappa[t - 1] + kernel.kappa(static_cast<double>(t - 1));
    cum_rho[t] = cum_rho[t - 1] * params.decay + 1.0;
  }

  Ten3 ds = ds_direct;
  Mat dd(p.relations, n);
  double* drq = grads.relation_embeddings.row(tape.ctx.relation);
  std::vector<double> du(n), dR(n);

  for (std::size_t t = T; t-- > 1;) {
    for (std::size_t z = 0; z < V; ++z) {
      const double* u = tape.potential.slab(t) + z * n;
      for (std::size_t c = 0; c < n; ++c)
        du[c] = ds(t, z, c) * surrogate_grad(u[c], params.v_th, SurrogateSpec{cfg.a1});

      const double* R = tape.filtered.slab(t) + z * n;
      std::fill(dR.begin(), dR.end(), 0.0);
      for (std::size_t c = 0; c < n; ++c) {
        const double dv = du[c];
        if (dv == 0.0) continue;
        grads.bias[c] += dv * cum_kappa[t];
        if (z == tape.ctx.source) drq[c] += dv * cum_rho[t];
        const double scaled = p.scale * dv;
        double* gw = grads.weight.row(c);
        const double* wr = p.weight.row(c);
        for (std::size_t k = 0; k < n; ++k) {
          gw[k] += scaled * R[k];
          dR[k] += wr[k] * scaled;
        }
      }

      // reset kernel: u[t] depends on own spikes at earlier times
      for (std::size_t c = 0; c < n; ++c) {
        const double dv = du[c];
        if (dv == 0.0) continue;
        double w = params.decay;
        for (std::size_t tr = t; tr-- > 1;) {
          ds(tr, z, c) += dv * (-params.v_th) * w;
          w *= params.decay;
        }
      }

      // input kernels: scatter to presynaptic trains and the delay table
      for (std::size_t ei = 0; ei < g.num_edges(); ++ei) {
        if (g.dst[ei] != z) continue;
        if (tape.mask != nullptr && tape.mask->hidden(ei)) continue;
        const std::size_t k = g.src[ei];
        const std::size_t r = g.rel[ei];
        for (std::size_t c = 0; c < n; ++c) {
          const double dv = dR[c];
          if (dv == 0.0) continue;
          const double d = tape.delays(r, c);
          for (std::size_t ts = 0; ts + 1 < t; ++ts) {
            const double x = static_cast<double>(t - 1 - ts) - d;
            if (x < 0.0) continue;
            const double s = tape.spikes(ts, k, c);
            ds(ts, k, c) += dv * kernel.kappa(x);
            if (s != 0.0) dd(r, c) += dv * (-kernel.kappa_dot(x)) * s;
          }
        }
      }
    }
  }

  // delay head chain (continuous: no straight-through needed)
  const double* rq = p.relation_embeddings.row(tape.ctx.relation);
  for (std::size_t r = 0; r < p.relations; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double dlogit = dd(r, c);
      if (dlogit == 0.0) continue;
      const double sg = sigmoid(tape.logits(r, c));
      dlogit *= cfg.beta * sg * (1.0 - sg);
      grads.delay_b(r, c) += dlogit;
      if (!cfg.homogeneous) {
        double* gw = grads.delay_w[r].row(c);
        const double* wr = p.delay_w[r].row(c);
        for (std::size_t kk = 0; kk < n; ++kk) {
          gw[kk] += dlogit * rq[kk];
          drq[kk] += dlogit * wr[kk];
        }
      }
    }
}

}  // namespace grsnn
