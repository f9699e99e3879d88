#pragma once

#include <stdexcept>
#include <string>

namespace csat {

// Exit-code mapping for the CLI: ConfigError -> 2, DataError -> 3,
// ConvergenceError -> 4.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, std::string diagnostics)
      : std::runtime_error(what), diagnostics(std::move(diagnostics)) {}
  std::string diagnostics;
};

}  // namespace csat
