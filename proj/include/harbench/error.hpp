#pragma once

#include <stdexcept>
#include <string>

namespace harbench {

/// Bad configuration, manifest, or argument. CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data. CLI maps these to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace harbench
