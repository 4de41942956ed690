#pragma once

#include <stdexcept>
#include <string>

namespace vagc {

// Invalid configuration, shape mismatch, or malformed input value.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value produced inside a computation.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Out-of-range index (embedding rows, selections, steps).
struct IndexError : std::out_of_range {
  explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

// A tape was reused after the parameters it was recorded against changed.
struct StaleTapeError : std::logic_error {
  explicit StaleTapeError(const std::string& what) : std::logic_error(what) {}
};

// File could not be read, written or parsed.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vagc
