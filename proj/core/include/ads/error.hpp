#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ads {

// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape or dimension mismatch. Messages name both offending shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values: out-of-range labels, unknown token ids, empty splits.
class InputError : public Error {
 public:
  using Error::Error;
};

// API misuse: backward on a non-scalar, stepping without gradients,
// reading a state queue before it has been filled.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration (unknown keys, bad field values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed binary file. Carries the byte offset of the first bad read.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  uint64_t offset() const { return offset_; }

 private:
  uint64_t offset_ = 0;
};

// Wrong magic bytes or unsupported format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ads
