#pragma once

#include <stdexcept>
#include <string>

namespace abon {

/// Base class for every error the engine raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Contract violation by the caller (continuing a finished sample,
/// ranking an empty list, invalid request fields, ...).
class MisuseError : public Error {
 public:
  using Error::Error;
};

/// Self-evaluation put no probability mass on either target token.
class DegenerateEvalError : public Error {
 public:
  using Error::Error;
};

/// Remote call never reached the server (connect/send/receive failure).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Remote server answered with a non-success HTTP status.
class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& what)
      : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Remote server answered 2xx but the body did not parse as expected.
class MalformedBodyError : public Error {
 public:
  using Error::Error;
};

/// Neither target token appeared in the returned top log-probabilities.
/// Carries the depth that was requested so callers know what to raise.
class TokenNotFoundError : public Error {
 public:
  TokenNotFoundError(int requested_depth, const std::string& what)
      : Error(what), requested_depth_(requested_depth) {}
  int requested_depth() const { return requested_depth_; }

 private:
  int requested_depth_;
};

/// percent_of_max_improvement with q_max == q_one has no defined value.
class UndefinedBaselineError : public Error {
 public:
  using Error::Error;
};

/// File or stream I/O failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace abon
