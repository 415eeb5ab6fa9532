#pragma once

#include <stdexcept>
#include <string>

namespace rarecorpus {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed configuration, out-of-range values, invalid spans.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A request that is well-formed but conflicts with current state.
class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace rarecorpus
