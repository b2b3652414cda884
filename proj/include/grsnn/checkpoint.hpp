#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grsnn/errors.hpp"
#include "grsnn/model.hpp"

namespace grsnn {

// Checkpoint layout: a text manifest naming scalar hyperparameters and a
// shape line per parameter tensor, an `end_header` sentinel, then the flat
// little-endian 64-bit float payloads in manifest order.

inline const char* encoding_name(RelationEncoding e) {
  switch (e) {
    case RelationEncoding::delay: return "delay";
    case RelationEncoding::weight: return "weight";
    case RelationEncoding::none: return "none";
  }
  return "delay";
}

inline void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                            const ModelConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.precision(17);
  out << "grsnn-checkpoint v1\n";
  out << "hyper steps " << cfg.steps << "\n";
  out << "hyper channels " << cfg.channels << "\n";
  out << "hyper head_hidden " << cfg.head_hidden << "\n";
  out << "hyper relations " << params.relations << "\n";
  out << "hyper tau_ratio " << cfg.tau_ratio << "\n";
  out << "hyper v_th " << cfg.v_th << "\n";
  out << "hyper beta " << cfg.beta << "\n";
  out << "hyper lambda " << cfg.lambda << "\n";
  out << "hyper a1 " << cfg.a1 << "\n";
  out << "hyper scale " << cfg.scale << "\n";
  out << "hyper encoding " << encoding_name(cfg.encoding) << "\n";
  out << "hyper homogeneous " << (cfg.homogeneous ? 1 : 0) << "\n";
  auto views = parameter_views(const_cast<ParameterSet&>(params));
  for (const auto& v : views) out << "param " << v.name << " " << v.size << "\n";
  out << "end_header\n";
  for (const auto& v : views)
    out.write(reinterpret_cast<const char*>(v.data),
              static_cast<std::streamsize>(v.size * sizeof(double)));
  if (!out) throw DataError("short write on checkpoint " + path.string());
}

struct Checkpoint {
  ParameterSet params;
  ModelConfig cfg;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "grsnn-checkpoint v1")
    throw DataError("not a checkpoint file: " + path.string());

  Checkpoint ck;
  std::size_t relations = 0;
  std::vector<std::pair<std::string, std::size_t>> manifest;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string kind, name;
    ls >> kind >> name;
    if (kind == "hyper") {
      std::string value;
      ls >> value;
      if (name == "steps") ck.cfg.steps = std::stoul(value);
      else if (name == "channels") ck.cfg.channels = std::stoul(value);
      else if (name == "head_hidden") ck.cfg.head_hidden = std::stoul(value);
      else if (name == "relations") relations = std::stoul(value);
      else if (name == "tau_ratio") ck.cfg.tau_ratio = std::stod(value);
      else if (name == "v_th") ck.cfg.v_th = std::stod(value);
      else if (name == "beta") ck.cfg.beta = std::stod(value);
      else if (name == "lambda") ck.cfg.lambda = std::stod(value);
      else if (name == "a1") ck.cfg.a1 = std::stod(value);
      else if (name == "scale") ck.cfg.scale = std::stod(value);
      else if (name == "encoding") ck.cfg.encoding = relation_encoding_from(value);
      else if (name == "homogeneous") ck.cfg.homogeneous = value == "1";
      else throw DataError("unknown checkpoint hyperparameter '" + name + "'");
    } else if (kind == "param") {
      std::size_t size = 0;
      ls >> size;
      manifest.emplace_back(name, size);
    } else {
      throw DataError("bad checkpoint manifest line: " + line);
    }
  }
  if (relations == 0) throw DataError("checkpoint missing relation count");

  Rng rng(0);
  ck.params = init_parameters(ck.cfg, relations, rng);
  ck.params.scale = ck.cfg.scale;
  auto views = parameter_views(ck.params);
  if (views.size() != manifest.size())
    throw DataError("checkpoint manifest does not match the expected tensor set");
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].name != manifest[i].first || views[i].size != manifest[i].second)
      throw DataError("checkpoint tensor mismatch at '" + manifest[i].first + "'");
    in.read(reinterpret_cast<char*>(views[i].data),
            static_cast<std::streamsize>(views[i].size * sizeof(double)));
    if (!in) throw DataError("checkpoint payload truncated at '" + manifest[i].first + "'");
  }
  return ck;
}

}  // namespace grsnn
