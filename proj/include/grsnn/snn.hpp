#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "grsnn/errors.hpp"
#include "grsnn/tensor.hpp"

namespace grsnn {

// Leaky integrate-and-fire constants for the discrete update
//   I[t+1] = decay * I[t] + alpha * (input + bias)
//   u[t+1] = decay * u[t] * (1 - s[t]) + I[t+1] + injection
//   s[t+1] = H(u[t+1] - v_th)
// decay = exp(-1/tau_ratio), alpha = e / tau_ratio, resting potential 0.
struct NeuronParams {
  double tau_ratio = 4.0;
  double v_th = 2.0;
  double u_rest = 0.0;
  double alpha = std::exp(1.0) / 4.0;
  double decay = std::exp(-0.25);

  static NeuronParams make(double tau_ratio, double v_th) {
    if (!(tau_ratio > 0.0)) throw ConfigError("NeuronParams: tau_ratio must be > 0");
    if (!(v_th > 0.0)) throw ConfigError("NeuronParams: v_th must be > 0");
    NeuronParams p;
    p.tau_ratio = tau_ratio;
    p.v_th = v_th;
    p.u_rest = 0.0;
    p.alpha = std::exp(1.0) / tau_ratio;
    p.decay = std::exp(-1.0 / tau_ratio);
    return p;
  }
};

// Discrete response kernel of the double-filtered LIF input path and its
// derivative. kappa is the membrane response at offset tau to a unit input;
// both vanish for tau < 0. Real-valued offsets are allowed so the same code
// serves the continuous-delay verification mode.
struct KernelSpec {
  double tau_ratio = 4.0;
  double alpha = std::exp(1.0) / 4.0;

  static KernelSpec make(double tau_ratio) {
    if (!(tau_ratio > 0.0)) throw ConfigError("KernelSpec: tau_ratio must be > 0");
    KernelSpec k;
    k.tau_ratio = tau_ratio;
    k.alpha = std::exp(1.0) / tau_ratio;
    return k;
  }

  double kappa(double tau) const {
    if (tau < 0.0) return 0.0;
    return alpha * (tau + 1.0) * std::exp(-tau / tau_ratio);
  }

  double kappa_dot(double tau) const {
    if (tau < 0.0) return 0.0;
    return alpha * (1.0 - (tau + 1.0) / tau_ratio) * std::exp(-tau / tau_ratio);
  }
};

inline double kernel_eval(double tau, const KernelSpec& spec, bool derivative = false) {
  return derivative ? spec.kappa_dot(tau) : spec.kappa(tau);
}

// Per-population state: input current I, membrane potential u and the spike
// output of the last step, each (nodes x channels).
struct LayerState {
  Mat current;
  Mat potential;
  Mat last_spikes;

  LayerState() = default;
  LayerState(std::size_t nodes, std::size_t channels)
      : current(nodes, channels), potential(nodes, channels), last_spikes(nodes, channels) {}

  std::size_t nodes() const { return current.rows; }
  std::size_t channels() const { return current.cols; }
};

// One synchronous update. delayed_input must already be the weighted sum of
// delayed presynaptic spikes; bias is per channel; injection is added
// directly to the membrane potential. Returns the new spike matrix (also
// stored in state.last_spikes).
inline const Mat& lif_step(LayerState& state, const Mat& delayed_input,
                           const std::vector<double>& bias, const Mat& injection,
                           const NeuronParams& p) {
  require_shape(state.current.same_shape(delayed_input), "lif_step: delayed_input shape");
  require_shape(state.current.same_shape(injection), "lif_step: injection shape");
  require_shape(bias.size() == state.channels(), "lif_step: bias length");
  const std::size_t nodes = state.nodes();
  const std::size_t n = state.channels();
  for (std::size_t z = 0; z < nodes; ++z) {
    double* I = state.current.row(z);
    double* u = state.potential.row(z);
    double* s = state.last_spikes.row(z);
    const double* in = delayed_input.row(z);
    const double* inj = injection.row(z);
    for (std::size_t c = 0; c < n; ++c) {
      I[c] = p.decay * I[c] + p.alpha * (in[c] + bias[c]);
      u[c] = p.decay * u[c] * (1.0 - s[c]) + I[c] + inj[c];
      s[c] = (u[c] >= p.v_th) ? 1.0 : 0.0;
    }
  }
  return state.last_spikes;
}

// Arrival-time-indexed ring buffer realizing synaptic delays. A spike pushed
// for arrival step t is read exactly at step t; the slot is recycled after
// the read, so capacity max_delay + 1 suffices.
class DelayLine {
 public:
  DelayLine(std::size_t max_delay, std::size_t nodes, std::size_t channels)
      : slots_(max_delay + 1),
        nodes_(nodes),
        channels_(channels),
        buf_(slots_ * nodes * channels, 0.0) {}

  void push(std::size_t arrival_step, std::size_t node, std::size_t channel, double value) {
    buf_[offset(arrival_step % slots_, node, channel)] += value;
  }

  const double* arrivals(std::size_t step, std::size_t node) const {
    return buf_.data() + offset(step % slots_, node, 0);
  }

  // Must be called once the step's arrivals have been consumed.
  void retire(std::size_t step) {
    const std::size_t base = (step % slots_) * nodes_ * channels_;
    std::fill(buf_.begin() + base, buf_.begin() + base + nodes_ * channels_, 0.0);
  }

  std::size_t capacity() const { return slots_; }

 private:
  std::size_t offset(std::size_t slot, std::size_t node, std::size_t channel) const {
    return (slot * nodes_ + node) * channels_ + channel;
  }
  std::size_t slots_, nodes_, channels_;
  std::vector<double> buf_;
};

// Binary spike history, (T x nodes x channels). Row t is the spike state at
// discrete time t; row 0 holds forced initial spikes (all zero when none).
struct SpikeRaster {
  std::size_t steps = 0;
  std::size_t nodes = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> s;

  SpikeRaster() = default;
  SpikeRaster(std::size_t t, std::size_t v, std::size_t n)
      : steps(t), nodes(v), channels(n), s(t * v * n, 0) {}

  std::uint8_t at(std::size_t t, std::size_t node, std::size_t ch) const {
    return s[(t * nodes + node) * channels + ch];
  }
  void set(std::size_t t, std::size_t node, std::size_t ch, bool v) {
    s[(t * nodes + node) * channels + ch] = v ? 1 : 0;
  }

  std::size_t count() const {
    std::size_t k = 0;
    for (auto b : s) k += b;
    return k;
  }
};

// Scalar-weighted wiring for the standalone simulator: one weight and one
// integer delay per edge, applied channel-wise.
struct CoreEdge {
  std::size_t src;
  std::size_t dst;
  double weight;
  std::size_t delay;
};

struct CoreGraph {
  std::size_t nodes = 0;
  std::size_t channels = 1;
  std::size_t max_delay = 0;
  std::vector<CoreEdge> edges;
};

// injection(t, node, channel) -> current added to u at the update computing
// step t+1. Initial spikes (row 0) may be forced for oracle constructions.
using InjectionFn = std::function<double(std::size_t, std::size_t, std::size_t)>;

inline SpikeRaster simulate(const CoreGraph& g, const InjectionFn& injection,
                            std::size_t steps, const NeuronParams& p,
                            const Mat* initial_spikes = nullptr) {
  if (steps < 1) throw ConfigError("simulate: steps must be >= 1");
  for (const auto& e : g.edges) {
    if (e.src >= g.nodes || e.dst >= g.nodes)
      throw ConfigError("simulate: edge endpoint out of range");
    if (e.delay > g.max_delay) throw ConfigError("simulate: delay exceeds max_delay");
  }

  const std::size_t V = g.nodes;
  const std::size_t n = g.channels;
  LayerState state(V, n);
  if (initial_spikes != nullptr) {
    require_shape(initial_spikes->rows == V && initial_spikes->cols == n,
                  "simulate: initial spike shape");
    state.last_spikes = *initial_spikes;
  }

  // out-edge index
  std::vector<std::vector<const CoreEdge*>> out(V);
  for (const auto& e : g.edges) out[e.src].push_back(&e);

  SpikeRaster raster(steps, V, n);
  for (std::size_t z = 0; z < V; ++z)
    for (std::size_t c = 0; c < n; ++c)
      raster.set(0, z, c, state.last_spikes(z, c) != 0.0);

  DelayLine line(g.max_delay, V, n);
  Mat delayed(V, n), inj(V, n);
  const std::vector<double> bias(n, 0.0);

  for (std::size_t t = 0; t + 1 < steps; ++t) {
    // schedule arrivals of spikes emitted at t
    for (std::size_t z = 0; z < V; ++z) {
      const double* s = state.last_spikes.row(z);
      for (std::size_t c = 0; c < n; ++c) {
        if (s[c] == 0.0) continue;
        for (const CoreEdge* e : out[z]) line.push(t + e->delay, e->dst, c, e->weight);
      }
    }
    delayed.fill(0.0);
    for (std::size_t z = 0; z < V; ++z) {
      const double* arr = line.arrivals(t, z);
      double* d = delayed.row(z);
      for (std::size_t c = 0; c < n; ++c) d[c] = arr[c];
    }
    line.retire(t);
    for (std::size_t z = 0; z < V; ++z)
      for (std::size_t c = 0; c < n; ++c) inj(z, c) = injection(t, z, c);

    lif_step(state, delayed, bias, inj, p);
    for (std::size_t z = 0; z < V; ++z)
      for (std::size_t c = 0; c < n; ++c)
        raster.set(t + 1, z, c, state.last_spikes(z, c) != 0.0);
  }
  return raster;
}

inline InjectionFn no_injection() {
  return [](std::size_t, std::size_t, std::size_t) { return 0.0; };
}

}  // namespace grsnn
