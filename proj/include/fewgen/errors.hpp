#pragma once

#include <stdexcept>
#include <string>

namespace fewgen {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Matrix/vector dimension mismatch.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

/// A function was called outside its contract (bad argument, wrong state).
struct ContractError : Error {
  explicit ContractError(const std::string& msg) : Error("contract error: " + msg) {}
};

/// Invalid configuration value or unknown configuration key.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

/// Malformed input data; the message names the offending row/field.
struct IngestError : Error {
  explicit IngestError(const std::string& msg) : Error("ingest error: " + msg) {}
};

/// File could not be read or written.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

}  // namespace fewgen
