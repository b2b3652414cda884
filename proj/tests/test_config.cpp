#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "grsnn/config.hpp"
#include "grsnn/reporting.hpp"

using namespace grsnn;
namespace fs = std::filesystem;

namespace {

fs::path temp_config(const std::string& body) {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() /
               ("grsnn_cfg_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::ofstream out(p);
  out << body;
  return p;
}

}  // namespace

TEST_CASE("config files parse sections, comments and whitespace") {
  auto p = temp_config(
      "# comment\n"
      "data.path = /tmp/data\n"
      "data.mode = homogeneous\n"
      "model.T = 12\n"
      "model.channels=16\n"
      "model.scale = 0.1\n"
      "train.lr = 0.005\n"
      "train.target_relation = r3\n"
      "\n"
      "eval.num_negatives = 50\n");
  RunConfig cfg;
  load_config_file(cfg, p);
  fs::remove(p);
  CHECK(cfg.data_path == "/tmp/data");
  CHECK(cfg.mode == DatasetMode::homogeneous);
  CHECK(cfg.model.steps == 12);
  CHECK(cfg.model.channels == 16);
  CHECK(cfg.model.scale == 0.1);
  CHECK(cfg.train.lr == 0.005);
  CHECK(cfg.train.target_relation == "r3");
  CHECK(cfg.eval_num_negatives == 50);
}

TEST_CASE("unknown keys and bad values are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.apply("model.unknown", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.apply("nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.apply("model.T", "abc"), ConfigError);
  CHECK_THROWS_AS(cfg.apply("train.self_adversarial", "maybe"), ConfigError);
  CHECK_THROWS_AS(cfg.apply("data.mode", "sideways"), ConfigError);
  auto p = temp_config("model.T 12\n");
  RunConfig cfg2;
  CHECK_THROWS_AS(load_config_file(cfg2, p), ConfigError);
  fs::remove(p);
}

TEST_CASE("validation catches inconsistent settings") {
  RunConfig cfg;
  cfg.apply("model.T", "0");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  RunConfig cfg2;
  cfg2.apply("model.lambda", "1.5");
  CHECK_THROWS_AS(cfg2.validate(), ConfigError);
  RunConfig cfg3;
  cfg3.apply("train.epochs", "0");
  CHECK_THROWS_AS(cfg3.validate(), ConfigError);
}

TEST_CASE("environment overrides map GRSNN_SECTION_KEY onto dotted keys") {
  RunConfig cfg;
  std::string e1 = "GRSNN_MODEL_T=14";
  std::string e2 = "GRSNN_TRAIN_SEED=99";
  std::string e3 = "GRSNN_DATA_MODE=kg-inductive";
  char* envp[] = {e1.data(), e2.data(), e3.data(), nullptr};
  apply_env_overrides(cfg, envp);
  CHECK(cfg.model.steps == 14);
  CHECK(cfg.train.seed == 99);
  CHECK(cfg.mode == DatasetMode::kg_inductive);

  std::string bad = "GRSNN_BOGUS_KEY=1";
  char* envp2[] = {bad.data(), nullptr};
  RunConfig cfg2;
  CHECK_THROWS_AS(apply_env_overrides(cfg2, envp2), ConfigError);
}

TEST_CASE("metric records serialize deterministically") {
  MetricsWriter w;
  w.add("mrr", 0.5833333333333333);
  w.add("epoch.1.loss", 1.25);
  w.add_text("mode", "kg-transductive");
  auto dir = fs::temp_directory_path() / ("grsnn_metrics_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  w.write_tsv(dir / "m.tsv");
  w.write_summary(dir / "m.json");
  std::ifstream tsv(dir / "m.tsv");
  std::string line;
  std::getline(tsv, line);
  CHECK(line == "mrr\t" + format_value(0.5833333333333333));
  std::getline(tsv, line);
  CHECK(line.rfind("epoch.1.loss\t", 0) == 0);
  std::ifstream js(dir / "m.json");
  std::string blob((std::istreambuf_iterator<char>(js)), std::istreambuf_iterator<char>());
  CHECK(blob.find("\"epoch\"") != std::string::npos);
  CHECK(blob.find("\"loss\": 1.25") != std::string::npos);
  fs::remove_all(dir);
}
