#pragma once

#include <stdexcept>
#include <string>

namespace hmc {

/// Base class for all library errors. Subclasses partition errors into the
/// families the CLI maps to distinct exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (taxonomy files, dataset files, config files).
class ParseError : public Error {
public:
  /// What exactly went wrong, for tests and targeted error reporting.
  enum class Kind {
    EmptyFile,
    BadLine,
    DuplicateId,
    NonConsecutiveId,
    UnknownParent,
    CycleDetected,
    DuplicateName,
    BadHeader,
    BadRecord,
  };

  ParseError(Kind kind, const std::string& message, long line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line) + ": " + message
                        : message),
        kind_(kind),
        line_(line) {}

  Kind kind() const noexcept { return kind_; }
  /// 1-based line number, or -1 when not tied to a line.
  long line() const noexcept { return line_; }

private:
  Kind kind_;
  long line_;
};

/// A structurally valid input that violates a domain contract
/// (invalid node id, level out of range, proportion out of [0,1], ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Mismatched vector/matrix shapes between caller and callee.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Invalid model or training configuration (level mismatch, ragged
/// taxonomy where uniform depth is required, non-positive widths, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Filesystem-level failure: unreadable, unwritable, or truncated files.
class IoError : public Error {
public:
  using Error::Error;
};

/// Inputs that are individually valid but inconsistent with each other
/// (taxonomy hash mismatch, checkpoint/dataset dimension conflict).
class CompatError : public Error {
public:
  using Error::Error;
};

}  // namespace hmc
