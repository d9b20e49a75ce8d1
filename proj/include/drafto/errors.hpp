#pragma once

#include <stdexcept>
#include <string>

namespace drafto {

/// Invalid configuration value (bad count, non-positive weight, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file; message carries file/line/key diagnostics.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Endpoints violate joint limits or start/goal are in collision.
struct TaskInfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace drafto
