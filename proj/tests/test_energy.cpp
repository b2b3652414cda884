#include <catch2/catch_amalgamated.hpp>

#include "grsnn/energy.hpp"

using namespace grsnn;

namespace {

EnergyModel fb_model() {
  EnergyModel m;
  m.steps = 10;
  m.channels = 32;
  m.spike_rate = 0.258;
  m.edges = 544230;  // augmented
  m.nodes = 14541;
  m.max_delay = 4;
  return m;
}

}  // namespace

TEST_CASE("spike rate counts spikes per cell") {
  SpikeRaster r(2, 2, 4);
  CHECK(spike_rate(r) == 0.0);
  r.set(0, 0, 0, true);
  r.set(0, 1, 2, true);
  r.set(1, 0, 3, true);
  r.set(1, 1, 1, true);
  CHECK(spike_rate(r) == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("operation count formulas") {
  EnergyModel tiny;
  tiny.steps = 1;
  tiny.channels = 1;
  tiny.nodes = 1;
  tiny.edges = 1;
  tiny.spike_rate = 1.0;
  auto c = op_counts(tiny, true);
  CHECK(c.additions == 3.0);
  CHECK(c.multiplications == 2.0);

  tiny.spike_rate = 0.0;
  auto silent = op_counts(tiny, true);
  CHECK(silent.additions == 2.0);  // only the per-neuron terms

  auto m = fb_model();
  auto spiking = op_counts(m, true);
  CHECK(spiking.additions == Catch::Approx(1.447e9).epsilon(0.001));
}

TEST_CASE("energy reproduces the published budget") {
  auto m = fb_model();
  auto spiking = energy(op_counts(m, true), m);
  // total synaptic energy 1.337 mJ within 5%
  CHECK(spiking.synaptic_joules == Catch::Approx(1.337e-3).epsilon(0.05));
  // ring-buffer overhead 0.004 mJ within 10%
  CHECK(spiking.delay_buffer_joules == Catch::Approx(0.004e-3).epsilon(0.10));
  // overhead is far below the synaptic budget
  CHECK(spiking.delay_buffer_joules / spiking.synaptic_joules < 0.01);
  // memory words: n * V * M_d
  CHECK(spiking.delay_buffer_words == 32.0 * 14541.0 * 4.0);

  auto dense = energy(op_counts(m, false), m, false);
  CHECK(dense.synaptic_joules / spiking.synaptic_joules >= 15.0);
}

TEST_CASE("energy is monotone in each driver") {
  auto base = fb_model();
  const double e0 = energy(op_counts(base, true), base).total_joules;
  auto inc = [&](auto setter) {
    EnergyModel m = fb_model();
    setter(m);
    return energy(op_counts(m, true), m).total_joules;
  };
  CHECK(inc([](EnergyModel& m) { m.spike_rate = 0.3; }) >= e0);
  CHECK(inc([](EnergyModel& m) { m.steps = 12; }) >= e0);
  CHECK(inc([](EnergyModel& m) { m.channels = 48; }) >= e0);
  CHECK(inc([](EnergyModel& m) { m.edges += 10000; }) >= e0);
  CHECK(inc([](EnergyModel& m) { m.nodes += 10000; }) >= e0);
}

TEST_CASE("spiking additions are affine in the spike rate") {
  auto m = fb_model();
  const double T = 10.0, n = 32.0, E = 544230.0;
  m.spike_rate = 0.0;
  const double a0 = op_counts(m, true).additions;
  m.spike_rate = 0.5;
  const double a1 = op_counts(m, true).additions;
  CHECK((a1 - a0) / 0.5 == Catch::Approx(T * n * n * E).epsilon(1e-12));
}

TEST_CASE("invalid models are rejected") {
  EnergyModel m = fb_model();
  m.spike_rate = 1.5;
  CHECK_THROWS_AS(op_counts(m, true), ConfigError);
  EnergyModel m2 = fb_model();
  m2.e_ac = 0.0;
  CHECK_THROWS_AS(op_counts(m2, true), ConfigError);
}
