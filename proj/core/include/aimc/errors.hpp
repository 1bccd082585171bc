#pragma once

#include <stdexcept>
#include <string>

namespace aimc {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A weight, probability or parameter outside the domain where it is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Row/column/tile index out of range, or mismatched dimensions.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (IDX, checkpoint). The message carries the byte offset.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace aimc
