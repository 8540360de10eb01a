#pragma once

#include <stdexcept>
#include <string>

namespace diffreg {

/// Malformed or out-of-contract arguments (non-finite values, bad sizes).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested quantity exists but cannot be computed reliably, e.g. the
/// se(3) logarithm at a rotation angle of pi.
class IllConditioned : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs without enough structure to score, such as flat images in NCC.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or file format failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace diffreg
