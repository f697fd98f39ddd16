#pragma once

#include <stdexcept>
#include <string>

namespace rlens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor, grid or layer shapes that do not compose.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration: bad parameters, unknown names, missing keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, truncated or corrupt input data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace rlens
