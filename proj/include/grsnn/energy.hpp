#pragma once

#include <cstdint>

#include "grsnn/errors.hpp"
#include "grsnn/snn.hpp"

namespace grsnn {

// Operation-count and energy model for the deployed network: 45 nm CMOS
// per-op energies, spike rate, and the graph/network dimensions the counts
// depend on. Delay storage is costed as a ring buffer (one extra
// accumulation per neuron per step; n * |V| * max_delay words of memory).
struct EnergyModel {
  double e_ac = 0.9e-12;   // J per accumulate
  double e_mac = 4.6e-12;  // J per multiply-accumulate
  std::size_t steps = 10;           // T
  std::size_t channels = 32;        // n
  double spike_rate = 0.0;          // fr
  std::uint64_t edges = 0;          // |E| (augmented)
  std::uint64_t nodes = 0;          // |V|
  std::uint64_t max_delay = 4;      // M_d

  void validate() const {
    if (!(e_ac > 0.0) || !(e_mac > 0.0)) throw ConfigError("energy: op energies must be > 0");
    if (steps == 0 || channels == 0) throw ConfigError("energy: steps/channels must be > 0");
    if (!(spike_rate >= 0.0 && spike_rate <= 1.0))
      throw ConfigError("energy: spike rate must lie in [0, 1]");
  }
};

inline double spike_rate(const SpikeRaster& raster) {
  const double cells = static_cast<double>(raster.steps) * static_cast<double>(raster.nodes) *
                       static_cast<double>(raster.channels);
  return cells == 0.0 ? 0.0 : static_cast<double>(raster.count()) / cells;
}

struct OpCounts {
  double additions = 0.0;
  double multiplications = 0.0;
};

// Spiking: spikes trigger accumulations on synapses, leak terms cost two
// multiplications per neuron-step, bias and current integration one
// addition each. Non-spiking counterpart: dense matrix messages every step.
inline OpCounts op_counts(const EnergyModel& m, bool spiking) {
  m.validate();
  const double T = static_cast<double>(m.steps);
  const double n = static_cast<double>(m.channels);
  const double E = static_cast<double>(m.edges);
  const double V = static_cast<double>(m.nodes);
  OpCounts c;
  if (spiking) {
    c.additions = T * n * n * m.spike_rate * E + 2.0 * T * n * V;
    c.multiplications = 2.0 * T * n * V;
  } else {
    c.additions = T * n * n * (E + V);
    c.multiplications = T * n * n * E;
  }
  return c;
}

struct EnergyReport {
  OpCounts counts;
  double synaptic_joules = 0.0;
  double delay_buffer_joules = 0.0;   // ring-buffer accumulation overhead
  double delay_buffer_words = 0.0;    // ring-buffer memory overhead
  double total_joules = 0.0;
};

inline EnergyReport energy(const OpCounts& counts, const EnergyModel& m,
                           bool include_delay_overhead = true) {
  m.validate();
  EnergyReport r;
  r.counts = counts;
  r.synaptic_joules = counts.additions * m.e_ac + counts.multiplications * m.e_mac;
  if (include_delay_overhead) {
    const double T = static_cast<double>(m.steps);
    const double n = static_cast<double>(m.channels);
    const double V = static_cast<double>(m.nodes);
    r.delay_buffer_joules = T * n * V * m.e_ac;
    r.delay_buffer_words = n * V * static_cast<double>(m.max_delay);
  }
  r.total_joules = r.synaptic_joules + r.delay_buffer_joules;
  return r;
}

}  // namespace grsnn
