#pragma once

#include <stdexcept>
#include <string>

namespace grsnn {

// Invalid or inconsistent run configuration (bad key, bad value, T=0, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset problems: missing files, malformed triplet lines, split violations.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal contract: shape mismatch, tape/graph disagreement.
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Non-finite loss or gradient during optimization.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grsnn
