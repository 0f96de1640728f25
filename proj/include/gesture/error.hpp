#pragma once

#include <stdexcept>
#include <string>

namespace gesture {

// Invalid argument or configuration value supplied by the caller.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent input data (files, manifests, tensors).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

void warn(const std::string& message);

}  // namespace gesture
