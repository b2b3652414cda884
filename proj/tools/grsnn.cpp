// Command-line front end: training, evaluation, oracle verification, energy
// accounting, reasoning-path explanations and synthetic dataset generation.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grsnn/checkpoint.hpp"
#include "grsnn/config.hpp"
#include "grsnn/energy.hpp"
#include "grsnn/eval.hpp"
#include "grsnn/graph.hpp"
#include "grsnn/interpret.hpp"
#include "grsnn/model.hpp"
#include "grsnn/oracles.hpp"
#include "grsnn/reporting.hpp"
#include "grsnn/synthetic.hpp"
#include "grsnn/train.hpp"

namespace fs = std::filesystem;
using namespace grsnn;

extern "C" char** environ;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitOracle = 5;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string out_dir;
  std::string mode;
  std::string relation_encoding;
  std::int64_t seed = -1;
  std::int64_t workers = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key=value configuration file");
  cmd->add_option("--set", flags.overrides, "override a configuration key (key=value)");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--mode", flags.mode,
                  "dataset mode: kg-transductive | kg-inductive | homogeneous");
  cmd->add_option("--relation-encoding", flags.relation_encoding,
                  "relation information carrier: delay | weight | none");
  cmd->add_option("--seed", flags.seed, "master random seed");
  cmd->add_option("--workers", flags.workers, "worker threads (default 1)");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) load_config_file(cfg, flags.config_path);
  apply_env_overrides(cfg, environ);
  for (const auto& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!flags.mode.empty()) cfg.mode = dataset_mode_from(flags.mode);
  if (!flags.relation_encoding.empty())
    cfg.model.encoding = relation_encoding_from(flags.relation_encoding);
  if (flags.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.workers >= 1) cfg.train.workers = static_cast<std::size_t>(flags.workers);
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  cfg.validate();
  return cfg;
}

struct LoadedData {
  Split split;
  KnowledgeGraph augmented;       // training graph, augmented
  CompiledGraph graph;
  KnowledgeGraph eval_augmented;  // inductive evaluation graph, augmented
  CompiledGraph eval_graph;
};

LoadedData load_data(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("data.path is not set");
  LoadedData d;
  d.split = load_split(cfg.data_path, cfg.mode);
  d.augmented = d.split.graph;
  if (cfg.mode == DatasetMode::homogeneous)
    augment_self_loops(d.augmented);
  else
    augment(d.augmented);
  d.graph = CompiledGraph::from(d.augmented);
  if (cfg.mode == DatasetMode::kg_inductive) {
    d.eval_augmented = d.split.eval_graph;
    augment(d.eval_augmented);
    d.eval_graph = CompiledGraph::from(d.eval_augmented);
  }
  return d;
}

void write_eval_metrics(MetricsWriter& metrics, const RankingMetrics& m,
                        const std::string& prefix) {
  metrics.add(prefix + "mr", m.mr);
  metrics.add(prefix + "mrr", m.mrr);
  metrics.add(prefix + "hits1", m.hits1);
  metrics.add(prefix + "hits3", m.hits3);
  metrics.add(prefix + "hits10", m.hits10);
}

int cmd_train(const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  auto data = load_data(cfg);
  fs::create_directories(cfg.out_dir);

  auto result = train(data.split, data.augmented, data.graph, cfg.model, cfg.train, cfg.mode);
  save_checkpoint(fs::path(cfg.out_dir) / "checkpoint.grsnn", result.best_params, result.cfg);

  MetricsWriter metrics;
  metrics.add_text("mode", dataset_mode_name(cfg.mode));
  metrics.add_text("relation_encoding", encoding_name(cfg.model.encoding));
  metrics.add("seed", static_cast<double>(cfg.train.seed));
  for (const auto& rec : result.history) {
    const std::string prefix = "epoch." + std::to_string(rec.epoch) + ".";
    metrics.add(prefix + "loss", rec.loss);
    metrics.add(prefix + "val_metric", rec.val_metric);
  }
  metrics.add("best_epoch", static_cast<double>(result.best_epoch));
  metrics.add("best_val_metric", result.best_val);
  metrics.write_tsv(fs::path(cfg.out_dir) / "train_metrics.tsv");
  metrics.write_summary(fs::path(cfg.out_dir) / "train_summary.json");
  std::cout << "checkpoint written to " << (fs::path(cfg.out_dir) / "checkpoint.grsnn").string()
            << "\nbest epoch " << result.best_epoch << " val " << format_value(result.best_val)
            << "\n";
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path) {
  RunConfig cfg = resolve_config(flags);
  auto ck = load_checkpoint(checkpoint_path);
  auto data = load_data(cfg);
  fs::create_directories(cfg.out_dir);
  const TripletSet known = known_triplet_set(data.split);

  MetricsWriter metrics;
  metrics.add_text("mode", dataset_mode_name(cfg.mode));
  Rng eval_rng = substream(cfg.train.seed, "eval-negatives");
  metrics.add("eval_seed", static_cast<double>(cfg.train.seed));

  if (cfg.mode == DatasetMode::homogeneous) {
    auto ev = evaluate_homogeneous(data.graph, data.augmented, data.split.test, ck.params,
                                   ck.cfg, known, eval_rng);
    metrics.add("auroc", ev.auroc);
    metrics.add("ap", ev.ap);
    metrics.add("spike_rate", ev.mean_spike_rate);
  } else if (cfg.mode == DatasetMode::kg_inductive) {
    const std::size_t negs = cfg.eval_num_negatives ? cfg.eval_num_negatives : 50;
    metrics.add("num_negatives", static_cast<double>(negs));
    auto records = rank_queries(data.eval_graph, data.eval_augmented, data.split.test,
                                ck.params, ck.cfg, known, negs, eval_rng, cfg.train.workers);
    write_eval_metrics(metrics, ranking_metrics(records), "");
  } else {
    auto records = rank_queries(data.graph, data.augmented, data.split.test, ck.params,
                                ck.cfg, known, cfg.eval_num_negatives, eval_rng,
                                cfg.train.workers);
    write_eval_metrics(metrics, ranking_metrics(records), "");
  }
  metrics.write_tsv(fs::path(cfg.out_dir) / "eval_metrics.tsv");
  metrics.write_summary(fs::path(cfg.out_dir) / "eval_summary.json");
  std::ifstream echo(fs::path(cfg.out_dir) / "eval_metrics.tsv");
  std::cout << echo.rdbuf();
  return kExitOk;
}

int cmd_oracle_check(std::size_t graphs, std::uint64_t seed, bool verbose) {
  using namespace grsnn::oracles;
  bool all_ok = true;

  // (1) first-spike distances against the classical algorithm, exact
  std::size_t distance_cases = 0, distance_fail = 0;
  {
    Rng rng(seed ^ 0xd15717a5ULL);
    for (std::size_t g = 0; g < graphs; ++g) {
      const std::size_t nodes = 5 + rng.uniform_int(46);
      WeightedGraph wg;
      wg.nodes = nodes;
      std::vector<std::size_t> perm(nodes);
      for (std::size_t i = 0; i < nodes; ++i) perm[i] = i;
      for (std::size_t i = nodes; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
      for (std::size_t i = 0; i < nodes; ++i)
        wg.edges.push_back({perm[i], perm[(i + 1) % nodes],
                            1 + static_cast<std::int64_t>(rng.uniform_int(4)), 1.0});
      for (std::size_t i = 0; i < nodes; ++i)
        for (std::size_t j = 0; j < nodes; ++j)
          if (i != j && rng.uniform() < 0.1)
            wg.edges.push_back({i, j, 1 + static_cast<std::int64_t>(rng.uniform_int(4)), 1.0});
      for (std::size_t x = 0; x < nodes; ++x) {
        auto classic = graph_distance(wg, x);
        auto spiking = spiking_graph_distance(wg, x);
        for (std::size_t y = 0; y < nodes; ++y) {
          ++distance_cases;
          if (classic[y] != spiking[y]) {
            ++distance_fail;
            all_ok = false;
          }
        }
      }
    }
    std::printf("distance equivalence: %zu pairs, %zu mismatches -> %s\n", distance_cases,
                distance_fail, distance_fail == 0 ? "ok" : "FAIL");
  }

  // (2)+(3) multiplicative path sums across delay scales
  const double grid[9] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  for (const std::string algo : {"katz", "pagerank"}) {
    std::vector<double> medians;
    for (double scale : {2.0, 4.0, 8.0}) {
      Rng rng(seed ^ hash_name(algo));
      std::vector<double> errs;
      for (std::size_t g = 0; g < graphs; ++g) {
        const std::size_t nodes = 4 + rng.uniform_int(3);
        WeightedGraph wg;
        wg.nodes = nodes;
        for (std::size_t i = 0; i < nodes; ++i)
          for (std::size_t j = 0; j < nodes; ++j)
            if (i != j && rng.uniform() < 0.12)
              wg.edges.push_back({i, j, 1, grid[rng.uniform_int(9)]});
        if (wg.edges.empty()) wg.edges.push_back({0, 1, 1, grid[rng.uniform_int(9)]});
        const std::size_t horizon = 6;
        auto deg = wg.out_degree();
        std::vector<std::vector<double>> classical;
        std::function<double(const WeightedEdge&)> value;
        if (algo == "katz") {
          // generalized attenuation: per-edge multiplicative values
          value = [](const WeightedEdge& e) { return e.value; };
          classical.assign(wg.nodes, std::vector<double>(wg.nodes, 0.0));
          std::vector<std::vector<double>> power(wg.nodes,
                                                 std::vector<double>(wg.nodes, 0.0));
          for (std::size_t x = 0; x < wg.nodes; ++x) power[x][x] = 1.0;
          for (std::size_t l = 0; l < horizon; ++l) {
            std::vector<std::vector<double>> next(wg.nodes,
                                                  std::vector<double>(wg.nodes, 0.0));
            for (std::size_t x = 0; x < wg.nodes; ++x)
              for (const auto& e : wg.edges)
                if (power[x][e.src] != 0.0) next[x][e.dst] += power[x][e.src] * e.value;
            power.swap(next);
            for (std::size_t x = 0; x < wg.nodes; ++x)
              for (std::size_t y = 0; y < wg.nodes; ++y) classical[x][y] += power[x][y];
          }
        } else {
          value = [&deg](const WeightedEdge& e) {
            return 1.0 / static_cast<double>(deg[e.src]);
          };
          classical = personalized_pagerank(wg, horizon);
        }
        double num = 0.0, den = 0.0;
        for (std::size_t x = 0; x < wg.nodes; ++x) {
          auto got = spiking_path_sum(wg, value, x, 4096, scale, horizon);
          for (std::size_t y = 0; y < wg.nodes; ++y) {
            num += std::abs(got.value[y] - classical[x][y]);
            den += classical[x][y];
          }
        }
        if (den > 0.0) errs.push_back(num / den);
        if (verbose)
          std::printf("  %s graph %zu scale %g: relative residual %.4f\n", algo.c_str(), g,
                      scale, den > 0 ? num / den : 0.0);
      }
      std::sort(errs.begin(), errs.end());
      medians.push_back(errs.empty() ? 0.0 : errs[errs.size() / 2]);
    }
    const bool ok = medians[0] >= medians[1] && medians[1] >= medians[2];
    if (!ok) all_ok = false;
    std::printf("%s convergence: median residual %.4f (scale 2) %.4f (4) %.4f (8) -> %s\n",
                algo.c_str(), medians[0], medians[1], medians[2], ok ? "ok" : "FAIL");
  }
  return all_ok ? kExitOk : kExitOracle;
}

int cmd_energy(const CommonFlags& flags, const std::string& checkpoint_path) {
  RunConfig cfg = resolve_config(flags);
  fs::create_directories(cfg.out_dir);
  EnergyModel model;
  model.e_ac = cfg.energy_e_ac_pj * 1e-12;
  model.e_mac = cfg.energy_e_mac_pj * 1e-12;

  if (!checkpoint_path.empty()) {
    auto ck = load_checkpoint(checkpoint_path);
    auto data = load_data(cfg);
    const CompiledGraph& graph =
        cfg.mode == DatasetMode::kg_inductive ? data.eval_graph : data.graph;
    const KnowledgeGraph& kg =
        cfg.mode == DatasetMode::kg_inductive ? data.eval_augmented : data.augmented;
    model.steps = ck.cfg.steps;
    model.channels = ck.cfg.channels;
    model.nodes = graph.nodes;
    model.edges = graph.num_edges();
    model.max_delay = static_cast<std::uint64_t>(ck.cfg.beta);
    if (cfg.energy_fr >= 0.0) {
      model.spike_rate = cfg.energy_fr;
    } else {
      // measure the spike rate over test-query simulations
      double total = 0.0;
      std::size_t count = 0;
      for (const auto& t : data.split.test) {
        auto tape = forward(graph, {t.head, t.relation}, ck.params, ck.cfg);
        total += spike_rate_of(tape);
        ++count;
        if (cfg.mode != DatasetMode::homogeneous) {
          auto inv =
              forward(graph, {t.tail, kg.inverse_relation(t.relation)}, ck.params, ck.cfg);
          total += spike_rate_of(inv);
          ++count;
        }
        if (count >= 64) break;  // the estimate stabilizes quickly
      }
      model.spike_rate = count ? total / static_cast<double>(count) : 0.0;
    }
  } else {
    if (cfg.energy_fr < 0.0)
      throw ConfigError("energy: set energy.fr or provide a checkpoint to measure it");
    model.spike_rate = cfg.energy_fr;
    model.steps = cfg.model.steps;
    model.channels = cfg.model.channels;
    model.max_delay = static_cast<std::uint64_t>(cfg.model.beta);
    if (!cfg.data_path.empty()) {
      auto data = load_data(cfg);
      model.nodes = data.graph.nodes;
      model.edges = data.graph.num_edges();
    }
  }
  if (model.nodes == 0 || model.edges == 0)
    throw ConfigError("energy: node and edge counts unavailable; provide data.path");

  auto spiking_counts = op_counts(model, true);
  auto spiking_report = energy(spiking_counts, model);
  auto dense_counts = op_counts(model, false);
  auto dense_report = energy(dense_counts, model, false);

  MetricsWriter metrics;
  metrics.add("fr", model.spike_rate);
  metrics.add("T", static_cast<double>(model.steps));
  metrics.add("n", static_cast<double>(model.channels));
  metrics.add("nodes", static_cast<double>(model.nodes));
  metrics.add("edges", static_cast<double>(model.edges));
  metrics.add("spiking.add_ops", spiking_counts.additions);
  metrics.add("spiking.mul_ops", spiking_counts.multiplications);
  metrics.add("spiking.synaptic_mJ", spiking_report.synaptic_joules * 1e3);
  metrics.add("spiking.delay_buffer_mJ", spiking_report.delay_buffer_joules * 1e3);
  metrics.add("spiking.delay_buffer_uJ", spiking_report.delay_buffer_joules * 1e6);
  metrics.add("spiking.delay_buffer_words", spiking_report.delay_buffer_words);
  metrics.add("spiking.total_mJ", spiking_report.total_joules * 1e3);
  metrics.add("spiking.total_pJ", spiking_report.total_joules * 1e12);
  metrics.add("dense.add_ops", dense_counts.additions);
  metrics.add("dense.mul_ops", dense_counts.multiplications);
  metrics.add("dense.total_mJ", dense_report.total_joules * 1e3);
  metrics.add("ratio.dense_over_spiking",
              dense_report.total_joules / spiking_report.total_joules);
  metrics.write_tsv(fs::path(cfg.out_dir) / "energy.tsv");
  metrics.write_summary(fs::path(cfg.out_dir) / "energy_summary.json");
  std::ifstream echo(fs::path(cfg.out_dir) / "energy.tsv");
  std::cout << echo.rdbuf();
  return kExitOk;
}

int cmd_explain(const CommonFlags& flags, const std::string& checkpoint_path,
                const std::string& head, const std::string& relation, const std::string& tail,
                std::size_t k, std::size_t beam_width) {
  RunConfig cfg = resolve_config(flags);
  auto ck = load_checkpoint(checkpoint_path);
  auto data = load_data(cfg);
  fs::create_directories(cfg.out_dir);
  const KnowledgeGraph& kg =
      cfg.mode == DatasetMode::kg_inductive ? data.eval_augmented : data.augmented;
  const CompiledGraph& graph =
      cfg.mode == DatasetMode::kg_inductive ? data.eval_graph : data.graph;

  auto want_entity = [&](const std::string& name) {
    auto it = kg.entity_ids.find(name);
    if (it == kg.entity_ids.end()) throw DataError("unknown entity '" + name + "'");
    return it->second;
  };
  auto it = kg.relation_ids.find(relation);
  if (it == kg.relation_ids.end()) throw DataError("unknown relation '" + relation + "'");
  Triplet triplet{want_entity(head), it->second, want_entity(tail)};

  auto importance = edge_importance(graph, ck.params, ck.cfg, triplet);
  if (importance.saturated_score)
    std::cerr << "warning: prediction score saturated; importances may vanish\n";
  auto paths =
      top_paths(importance, graph, triplet.head, triplet.tail, k, beam_width, ck.cfg.steps);
  std::ofstream out(fs::path(cfg.out_dir) / "paths.txt");
  for (const auto& p : paths) {
    const std::string line = format_path(p, graph, kg);
    out << line << '\n';
    std::cout << line << '\n';
  }
  if (paths.empty()) std::cout << "(no path within the horizon)\n";
  return kExitOk;
}

int cmd_synth(const std::string& kind, const std::string& out_dir, std::uint64_t seed,
              std::size_t entities, std::size_t edges) {
  if (kind == "composition") {
    CompositionSpec spec;
    spec.seed = seed;
    if (entities) spec.entities = entities;
    if (edges) {
      spec.r1_edges = edges;
      spec.r2_edges = edges;
    }
    write_composition_dataset(spec, out_dir);
  } else if (kind == "homogeneous") {
    HomogeneousSpec spec;
    spec.seed = seed;
    if (entities) spec.nodes = entities;
    if (edges) spec.undirected_edges = edges;
    write_homogeneous_dataset(spec, out_dir);
  } else {
    throw ConfigError("synth: unknown kind '" + kind + "' (composition | homogeneous)");
  }
  std::cout << "dataset written to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-coded spiking graph reasoning"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, energy_flags, explain_flags;
  std::string eval_checkpoint, energy_checkpoint, explain_checkpoint;
  std::string explain_head, explain_relation, explain_tail;
  std::size_t explain_k = 2, explain_beam = 10;
  std::size_t oracle_graphs = 50;
  std::uint64_t oracle_seed = 1;
  bool oracle_verbose = false;
  std::string synth_kind, synth_out;
  std::uint64_t synth_seed = 1;
  std::size_t synth_entities = 0, synth_edges = 0;

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train_cmd, train_flags);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, eval_flags);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();

  auto* oracle_cmd = app.add_subcommand(
      "oracle-check", "verify the constructive graph-algorithm equivalences");
  oracle_cmd->add_option("--graphs", oracle_graphs, "seeded graphs per suite");
  oracle_cmd->add_option("--seed", oracle_seed, "suite seed");
  oracle_cmd->add_flag("--verbose", oracle_verbose, "per-case residuals");

  auto* energy_cmd = app.add_subcommand("energy", "theoretical operation/energy accounting");
  add_common(energy_cmd, energy_flags);
  energy_cmd->add_option("--checkpoint", energy_checkpoint,
                         "measure the spike rate from this checkpoint");

  auto* explain_cmd = app.add_subcommand("explain", "top-k reasoning paths for a triplet");
  add_common(explain_cmd, explain_flags);
  explain_cmd->add_option("--checkpoint", explain_checkpoint, "checkpoint file")->required();
  explain_cmd->add_option("--head", explain_head, "head entity name")->required();
  explain_cmd->add_option("--relation", explain_relation, "relation name")->required();
  explain_cmd->add_option("--tail", explain_tail, "tail entity name")->required();
  explain_cmd->add_option("-k,--top", explain_k, "paths to return");
  explain_cmd->add_option("--beam-width", explain_beam, "beam width");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic benchmark dataset");
  synth_cmd->add_option("--kind", synth_kind, "composition | homogeneous")->required();
  synth_cmd->add_option("--out", synth_out, "dataset directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--entities", synth_entities, "entity/node count");
  synth_cmd->add_option("--edges", synth_edges, "edge count per generating relation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, eval_checkpoint);
    if (oracle_cmd->parsed())
      return cmd_oracle_check(oracle_graphs, oracle_seed, oracle_verbose);
    if (energy_cmd->parsed()) return cmd_energy(energy_flags, energy_checkpoint);
    if (explain_cmd->parsed())
      return cmd_explain(explain_flags, explain_checkpoint, explain_head, explain_relation,
                         explain_tail, explain_k, explain_beam);
    if (synth_cmd->parsed())
      return cmd_synth(synth_kind, synth_out, synth_seed, synth_entities, synth_edges);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
