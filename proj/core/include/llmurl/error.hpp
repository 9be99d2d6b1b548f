#pragma once

#include <stdexcept>
#include <string>

namespace llmurl {

/// Root of every exception the library throws.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (dataset files, fixture files, entity lists).
class DataError : public Error {
  public:
    using Error::Error;
};

/// Invalid configuration or option values.
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace llmurl
