#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace simplex {

// Contiguous user/item index. Item index `num_items` is reserved for padding.
using Index = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent interaction files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad configuration values, unknown keys, violated preconditions on settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf detected in a loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace simplex
