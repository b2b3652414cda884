#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "grsnn/rng.hpp"
#include "grsnn/snn.hpp"

using namespace grsnn;

TEST_CASE("kernel is causal and matches the closed form") {
  const auto spec = KernelSpec::make(4.0);
  CHECK(kernel_eval(-1.0, spec) == 0.0);
  CHECK(kernel_eval(-0.5, spec, true) == 0.0);
  // kappa[0] = alpha = e / tau_ratio
  CHECK(kernel_eval(0.0, spec) == Catch::Approx(std::exp(1.0) / 4.0).epsilon(1e-12));
  CHECK(kernel_eval(0.0, spec) == Catch::Approx(0.6796).margin(5e-5));
  // the derivative vanishes where (tau+1) equals tau_ratio
  CHECK(kernel_eval(3.0, spec, true) == Catch::Approx(0.0).margin(1e-15));
  // generic point, evaluated against the formula
  const double tau = 2.0;
  CHECK(kernel_eval(tau, spec) ==
        Catch::Approx(spec.alpha * 3.0 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("lif_step fixed point at rest") {
  auto p = NeuronParams::make(4.0, 2.0);
  LayerState st(3, 2);
  Mat zero(3, 2), inj(3, 2);
  std::vector<double> bias(2, 0.0);
  const Mat& s = lif_step(st, zero, bias, inj, p);
  for (double v : s.a) CHECK(v == 0.0);
  for (double v : st.current.a) CHECK(v == 0.0);
  for (double v : st.potential.a) CHECK(v == 0.0);
}

TEST_CASE("lif_step integrates a single strong input into a spike") {
  auto p = NeuronParams::make(4.0, 2.0);
  LayerState st(1, 1);
  Mat in(1, 1), inj(1, 1);
  in(0, 0) = 3.0;
  std::vector<double> bias(1, 0.0);
  lif_step(st, in, bias, inj, p);
  CHECK(st.current(0, 0) == Catch::Approx(3.0 * std::exp(1.0) / 4.0).epsilon(1e-12));
  CHECK(st.current(0, 0) == Catch::Approx(2.039).margin(5e-4));
  CHECK(st.potential(0, 0) == st.current(0, 0));
  CHECK(st.last_spikes(0, 0) == 1.0);
}

TEST_CASE("spike erases the pre-spike potential") {
  auto p = NeuronParams::make(4.0, 2.0);
  LayerState st(1, 1);
  st.potential(0, 0) = 5.0;
  st.current(0, 0) = 1.0;
  st.last_spikes(0, 0) = 1.0;
  Mat zero(1, 1), inj(1, 1);
  std::vector<double> bias(1, 0.0);
  lif_step(st, zero, bias, inj, p);
  // u carries only the decayed current, nothing from the 5.0
  CHECK(st.potential(0, 0) == p.decay * 1.0);
}

TEST_CASE("lif_step rejects shape mismatches") {
  auto p = NeuronParams::make(4.0, 2.0);
  LayerState st(2, 2);
  Mat bad(3, 2), inj(2, 2);
  std::vector<double> bias(2, 0.0);
  CHECK_THROWS_AS(lif_step(st, bad, bias, inj, p), ContractError);
}

TEST_CASE("delay line delivers at exactly the scheduled step") {
  DelayLine line(4, 2, 1);
  line.push(3, 1, 0, 2.5);
  for (std::size_t t = 0; t < 8; ++t) {
    const double got = line.arrivals(t, 1)[0];
    if (t == 3)
      CHECK(got == 2.5);
    else
      CHECK(got == 0.0);
    line.retire(t);
  }
}

TEST_CASE("empty graph stays silent") {
  CoreGraph g;
  g.nodes = 4;
  g.channels = 1;
  auto raster = simulate(g, no_injection(), 6, NeuronParams::make(4.0, 2.0));
  CHECK(raster.count() == 0);
}

TEST_CASE("simulate rejects bad arguments") {
  CoreGraph g;
  g.nodes = 2;
  g.max_delay = 1;
  g.edges.push_back({0, 1, 1.0, 3});  // exceeds max_delay
  CHECK_THROWS_AS(simulate(g, no_injection(), 4, NeuronParams::make(4.0, 2.0)), ConfigError);
  g.edges.clear();
  CHECK_THROWS_AS(simulate(g, no_injection(), 0, NeuronParams::make(4.0, 2.0)), ConfigError);
}

namespace {

// source spike forced at t=0; returns first spike time of `node`, or -1
int first_spike(const SpikeRaster& r, std::size_t node) {
  for (std::size_t t = 0; t < r.steps; ++t)
    if (r.at(t, node, 0)) return static_cast<int>(t);
  return -1;
}

SpikeRaster run_chain(const std::vector<std::size_t>& delays, std::size_t steps) {
  CoreGraph g;
  g.nodes = delays.size() + 1;
  g.channels = 1;
  g.max_delay = 16;
  for (std::size_t i = 0; i < delays.size(); ++i) g.edges.push_back({i, i + 1, 5.0, delays[i]});
  Mat s0(g.nodes, 1);
  s0(0, 0) = 1.0;
  return simulate(g, no_injection(), steps, NeuronParams::make(4.0, 2.0), &s0);
}

}  // namespace

TEST_CASE("a delayed spike arrives one update after its delay") {
  auto r3 = run_chain({3}, 8);
  CHECK(first_spike(r3, 1) == 4);
  auto r0 = run_chain({0}, 8);
  CHECK(first_spike(r0, 1) == 1);
}

TEST_CASE("incrementing every delay on a chain shifts the sink by the hop count") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 1 + rng.uniform_int(5);
    std::vector<std::size_t> delays(h);
    std::size_t total = 0;
    for (auto& d : delays) {
      d = rng.uniform_int(4);
      total += d + 1;
    }
    auto base = run_chain(delays, total + h + 4);
    REQUIRE(first_spike(base, h) == static_cast<int>(total));
    for (auto& d : delays) ++d;
    auto shifted = run_chain(delays, total + 2 * h + 4);
    CHECK(first_spike(shifted, h) == static_cast<int>(total + h));
  }
}

namespace {

CoreGraph random_graph(Rng& rng, std::size_t nodes) {
  CoreGraph g;
  g.nodes = nodes;
  g.channels = 1;
  g.max_delay = 4;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) {
      if (i == j || rng.uniform() > 0.3) continue;
      g.edges.push_back({i, j, rng.uniform(-2.0, 4.0), rng.uniform_int(5)});
    }
  return g;
}

}  // namespace

TEST_CASE("truncating the horizon preserves the raster prefix") {
  Rng rng(11);
  auto g = random_graph(rng, 6);
  auto inj = [](std::size_t t, std::size_t z, std::size_t) {
    return (z == 0 && t < 3) ? 3.0 : 0.0;
  };
  auto p = NeuronParams::make(4.0, 2.0);
  auto full = simulate(g, inj, 12, p);
  auto cut = simulate(g, inj, 7, p);
  for (std::size_t t = 0; t < cut.steps; ++t)
    for (std::size_t z = 0; z < g.nodes; ++z)
      CHECK(full.at(t, z, 0) == cut.at(t, z, 0));
}

TEST_CASE("identical runs produce bitwise-identical rasters") {
  Rng rng(13);
  auto g = random_graph(rng, 8);
  auto inj = [](std::size_t, std::size_t z, std::size_t) { return z < 2 ? 2.5 : 0.0; };
  auto p = NeuronParams::make(4.0, 2.0);
  auto a = simulate(g, inj, 10, p);
  auto b = simulate(g, inj, 10, p);
  CHECK(a.s == b.s);
}

TEST_CASE("post-spike potential equals current plus injection exactly") {
  auto p = NeuronParams::make(4.0, 2.0);
  LayerState st(2, 1);
  Mat in(2, 1), inj(2, 1);
  std::vector<double> bias(1, 0.5);
  Rng rng(17);
  for (int t = 0; t < 40; ++t) {
    Mat prev_spikes = st.last_spikes;
    in(0, 0) = rng.uniform(0.0, 4.0);
    in(1, 0) = rng.uniform(0.0, 4.0);
    inj(0, 0) = rng.uniform(0.0, 1.0);
    lif_step(st, in, bias, inj, p);
    for (std::size_t z = 0; z < 2; ++z)
      if (prev_spikes(z, 0) == 1.0)
        CHECK(st.potential(z, 0) == st.current(z, 0) + inj(z, 0));
  }
}
