#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grsnn/errors.hpp"

namespace grsnn {

// shortest-round-trip, locale-independent double formatting
inline std::string format_value(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

// Line-oriented records: metric<TAB>value.
class MetricsWriter {
 public:
  void add(const std::string& name, double value) {
    lines_.push_back(name + "\t" + format_value(value));
    summary_[name] = value;
  }
  void add_text(const std::string& name, const std::string& value) {
    lines_.push_back(name + "\t" + value);
    summary_[name] = value;
  }

  void write_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& line : lines_) out << line << '\n';
  }

  // machine-readable key tree: dotted metric names become nested objects
  void write_summary(const std::filesystem::path& path) const {
    nlohmann::ordered_json root;
    for (auto& [key, value] : summary_.items()) {
      nlohmann::ordered_json* at = &root;
      std::string rest = key;
      std::size_t dot;
      while ((dot = rest.find('.')) != std::string::npos) {
        at = &(*at)[rest.substr(0, dot)];
        rest = rest.substr(dot + 1);
      }
      (*at)[rest] = value;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << root.dump(2) << '\n';
  }

 private:
  std::vector<std::string> lines_;
  nlohmann::ordered_json summary_;
};

}  // namespace grsnn
