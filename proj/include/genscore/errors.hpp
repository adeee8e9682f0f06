#pragma once

#include <stdexcept>
#include <string>

namespace genscore {

// Base of every error raised by the library. The subclasses map onto the
// command-line exit codes (usage 2, data 3, backend 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or invariant-violating input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// A scoring backend failed: unknown token, transport failure, bad response.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Backend responded but broke the wire protocol.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace genscore
