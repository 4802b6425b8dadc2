#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace descry {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unparseable manifest line or judge output. `line` is 1-based, 0 when not
/// line-addressable; `raw_text` keeps the offending text verbatim.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw_text = {}, std::size_t line = 0)
      : Error(what), raw_text_(std::move(raw_text)), line_(line) {}
  const std::string& raw_text() const { return raw_text_; }
  std::size_t line() const { return line_; }

 private:
  std::string raw_text_;
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied an argument that violates an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Misconfiguration that retrying cannot fix (credentials, unknown backend).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int last_status)
      : Error(what), last_status_(last_status) {}
  /// HTTP status of the final attempt; 0 when no response was received.
  int last_status() const { return last_status_; }

 private:
  int last_status_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class ForbiddenError : public Error {
 public:
  using Error::Error;
};

}  // namespace descry
