#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace xmodal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value fails a declared precondition (bad spec field, out-of-range id, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An API was used against its contract (non-scalar loss, double estimate, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file; carries the byte offset of the failure.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::uint64_t offset)
      : Error(msg + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Bad run configuration (unknown key, inconsistent hyperparameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf surfaced where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace xmodal
