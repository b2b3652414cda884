#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "grsnn/errors.hpp"
#include "grsnn/graph.hpp"
#include "grsnn/model.hpp"
#include "grsnn/train.hpp"

namespace grsnn {

inline DatasetMode dataset_mode_from(const std::string& s) {
  if (s == "kg-transductive") return DatasetMode::kg_transductive;
  if (s == "kg-inductive") return DatasetMode::kg_inductive;
  if (s == "homogeneous") return DatasetMode::homogeneous;
  throw ConfigError("unknown dataset mode '" + s + "'");
}

inline const char* dataset_mode_name(DatasetMode m) {
  switch (m) {
    case DatasetMode::kg_transductive: return "kg-transductive";
    case DatasetMode::kg_inductive: return "kg-inductive";
    case DatasetMode::homogeneous: return "homogeneous";
  }
  return "kg-transductive";
}

// Flat key=value configuration with section prefixes (data., model.,
// train., eval., energy.). Sources merge in order: file, environment
// (GRSNN_SECTION_KEY), command-line overrides. Unknown keys are rejected.
struct RunConfig {
  std::string data_path;
  DatasetMode mode = DatasetMode::kg_transductive;
  ModelConfig model;
  TrainConfig train;
  std::size_t eval_num_negatives = 0;  // 0: rank against all entities
  double energy_e_ac_pj = 0.9;
  double energy_e_mac_pj = 4.6;
  double energy_fr = -1.0;  // <0: measure from a checkpoint
  std::string out_dir = "out";

  void apply(const std::string& key, const std::string& value);
  void validate() const;
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError(key + ": expected 0/1/true/false, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
}

}  // namespace detail

inline void RunConfig::apply(const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "data.path") data_path = value;
  else if (key == "data.mode") mode = dataset_mode_from(value);
  else if (key == "model.T" || key == "model.t") model.steps = parse_uint(key, value);
  else if (key == "model.channels") model.channels = parse_uint(key, value);
  else if (key == "model.tau_ratio") model.tau_ratio = parse_double(key, value);
  else if (key == "model.v_th") model.v_th = parse_double(key, value);
  else if (key == "model.beta") model.beta = parse_double(key, value);
  else if (key == "model.lambda") model.lambda = parse_double(key, value);
  else if (key == "model.a1") model.a1 = parse_double(key, value);
  else if (key == "model.scale") model.scale = parse_double(key, value);
  else if (key == "model.head_hidden") model.head_hidden = parse_uint(key, value);
  else if (key == "model.relation_encoding") model.encoding = relation_encoding_from(value);
  else if (key == "train.lr") train.lr = parse_double(key, value);
  else if (key == "train.epochs") train.epochs = parse_uint(key, value);
  else if (key == "train.batch_size") train.batch_size = parse_uint(key, value);
  else if (key == "train.negative_ratio") train.negative_ratio = parse_uint(key, value);
  else if (key == "train.self_adversarial") train.self_adversarial = parse_bool(key, value);
  else if (key == "train.adversarial_temperature")
    train.adversarial_temperature = parse_double(key, value);
  else if (key == "train.seed") train.seed = parse_uint(key, value);
  else if (key == "train.strip_query_edges")
    train.strip_query_edges = parse_bool(key, value);
  else if (key == "train.valid_negative_ratio")
    train.valid_negative_ratio = parse_uint(key, value);
  else if (key == "train.workers") train.workers = parse_uint(key, value);
  else if (key == "train.target_relation") train.target_relation = value;
  else if (key == "eval.num_negatives") eval_num_negatives = parse_uint(key, value);
  else if (key == "energy.e_ac_pj") energy_e_ac_pj = parse_double(key, value);
  else if (key == "energy.e_mac_pj") energy_e_mac_pj = parse_double(key, value);
  else if (key == "energy.fr") energy_fr = parse_double(key, value);
  else if (key == "out.dir") out_dir = value;
  else throw ConfigError("unknown configuration key '" + key + "'");
}

inline void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (!(energy_e_ac_pj > 0.0) || !(energy_e_mac_pj > 0.0))
    throw ConfigError("energy.e_ac_pj / energy.e_mac_pj must be > 0");
}

inline void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // strip whitespace
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto ks = key.find_last_not_of(" \t");
    key = key.substr(0, ks == std::string::npos ? 0 : ks + 1);
    const auto vs = value.find_first_not_of(" \t");
    value = vs == std::string::npos ? "" : value.substr(vs);
    cfg.apply(key, value);
  }
}

// GRSNN_MODEL_T=12 overrides model.T; section prefixes are matched against
// the known section names.
inline void apply_env_overrides(RunConfig& cfg, char** envp) {
  const std::string prefix = "GRSNN_";
  static const std::vector<std::string> sections{"data", "model", "train", "eval",
                                                 "energy", "out"};
  for (char** e = envp; e != nullptr && *e != nullptr; ++e) {
    std::string entry(*e);
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(prefix.size(), eq - prefix.size());
    const std::string value = entry.substr(eq + 1);
    for (auto& ch : name) ch = static_cast<char>(std::tolower(ch));
    bool matched = false;
    for (const auto& section : sections) {
      if (name.rfind(section + "_", 0) != 0) continue;
      std::string key = section + "." + name.substr(section.size() + 1);
      cfg.apply(key, value);
      matched = true;
      break;
    }
    if (!matched)
      throw ConfigError("unrecognized environment override " + entry.substr(0, eq));
  }
}

}  // namespace grsnn
